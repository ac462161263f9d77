#pragma once

// Decode models: feature z-scoring, PLS regression (NIPALS), two-class LDA
// posterior and the two-state HMM click filter.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace teledrive::decoder {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// z-scoring

struct ZScoreModel {
  std::vector<std::size_t> kept;     // input feature indices retained
  std::vector<std::size_t> dropped;  // zero-variance features, reported once at fit
  Vector means;                      // per kept feature
  Vector stds;

  std::size_t input_dim{0};
  std::size_t output_dim() const { return kept.size(); }
};

inline constexpr double kMinStd = 1e-12;

/// Rows are samples. Features whose spread is below kMinStd are dropped.
inline ZScoreModel zscore_fit(const Matrix& X) {
  if (X.rows() < 2) throw DecodeError("zscore_fit: need at least two samples");
  ZScoreModel m;
  m.input_dim = static_cast<std::size_t>(X.cols());
  std::vector<double> means, stds;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mu = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - mu).square().sum() / static_cast<double>(X.rows()));
    if (sd < kMinStd * std::max(1.0, std::abs(mu))) {
      m.dropped.push_back(static_cast<std::size_t>(j));
      continue;
    }
    m.kept.push_back(static_cast<std::size_t>(j));
    means.push_back(mu);
    stds.push_back(sd);
  }
  if (m.kept.empty()) throw DecodeError("zscore_fit: every feature has zero variance");
  m.means = Eigen::Map<Vector>(means.data(), static_cast<Eigen::Index>(means.size()));
  m.stds = Eigen::Map<Vector>(stds.data(), static_cast<Eigen::Index>(stds.size()));
  return m;
}

inline Vector zscore_apply(const ZScoreModel& m, std::span<const double> x) {
  if (x.size() != m.input_dim) throw DecodeError("zscore_apply: feature dimension mismatch");
  Vector out(static_cast<Eigen::Index>(m.kept.size()));
  for (std::size_t i = 0; i < m.kept.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out[k] = (x[m.kept[i]] - m.means[k]) / m.stds[k];
  }
  return out;
}

inline Matrix zscore_apply(const ZScoreModel& m, const Matrix& X) {
  if (static_cast<std::size_t>(X.cols()) != m.input_dim) throw DecodeError("zscore_apply: feature dimension mismatch");
  Matrix out(X.rows(), static_cast<Eigen::Index>(m.kept.size()));
  for (std::size_t i = 0; i < m.kept.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.col(k) = (X.col(static_cast<Eigen::Index>(m.kept[i])).array() - m.means[k]) / m.stds[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// PLS regression

struct PLSRModel {
  std::size_t n_components{0};
  Matrix weights;      // W, features x k
  Matrix x_loadings;   // P, features x k
  Matrix y_loadings;   // Q, targets x k
  Matrix coefficients; // B, features x targets
  Vector x_mean;
  Vector y_mean;
};

struct PLSROptions {
  int max_iter{10000};
  double tol{1e-13};
};

/// PLS2 by NIPALS with deflation of X and Y. Stops early (fewer components)
/// once the X residual is exhausted.
inline PLSRModel plsr_fit(const Matrix& X, const Matrix& Y, std::size_t k, PLSROptions opt = {}) {
  if (k < 1) throw DecodeError("plsr_fit: need at least one component");
  if (X.rows() != Y.rows()) throw DecodeError("plsr_fit: X and Y row counts differ");
  if (static_cast<std::size_t>(X.rows()) <= k) throw DecodeError("plsr_fit: need more samples than components");
  if (Y.cols() < 1) throw DecodeError("plsr_fit: Y has no columns");

  PLSRModel m;
  m.x_mean = X.colwise().mean().transpose();
  m.y_mean = Y.colwise().mean().transpose();
  Matrix E = X.rowwise() - m.x_mean.transpose();
  Matrix F = Y.rowwise() - m.y_mean.transpose();
  const double x_scale = E.norm();
  if (!(x_scale > 0)) throw DecodeError("plsr_fit: X is degenerate (no variation)");

  const std::size_t max_k = std::min<std::size_t>(k, static_cast<std::size_t>(std::min(X.rows() - 1, X.cols())));
  std::vector<Vector> ws, ps, qs;
  for (std::size_t a = 0; a < max_k; ++a) {
    if (E.norm() <= 1e-12 * x_scale) break;
    Eigen::Index best = 0;
    F.colwise().squaredNorm().maxCoeff(&best);
    Vector u = F.col(best);
    if (u.norm() == 0) u = E.col(0);  // Y fully explained; keep extracting X structure
    Vector w, t, t_old;
    bool converged = false;
    for (int it = 0; it < opt.max_iter; ++it) {
      w = E.transpose() * u;
      const double wn = w.norm();
      if (wn == 0) throw DecodeError("plsr_fit: zero weight vector");
      w /= wn;
      t = E * w;
      if (F.cols() == 1 || F.norm() == 0) {
        converged = true;
        break;
      }
      const Vector c = F.transpose() * t / t.squaredNorm();
      u = F * c / c.squaredNorm();
      if (it > 0 && (t - t_old).norm() <= opt.tol * t.norm()) {
        converged = true;
        break;
      }
      t_old = t;
    }
    if (!converged) throw DecodeError("plsr_fit: component " + std::to_string(a + 1) + " did not converge");
    const double tt = t.squaredNorm();
    const Vector p = E.transpose() * t / tt;
    const Vector q = F.transpose() * t / tt;
    E -= t * p.transpose();
    F -= t * q.transpose();
    ws.push_back(w);
    ps.push_back(p);
    qs.push_back(q);
  }
  if (ws.empty()) throw DecodeError("plsr_fit: no components extracted");

  const auto nk = static_cast<Eigen::Index>(ws.size());
  m.n_components = ws.size();
  m.weights.resize(X.cols(), nk);
  m.x_loadings.resize(X.cols(), nk);
  m.y_loadings.resize(Y.cols(), nk);
  for (Eigen::Index a = 0; a < nk; ++a) {
    m.weights.col(a) = ws[static_cast<std::size_t>(a)];
    m.x_loadings.col(a) = ps[static_cast<std::size_t>(a)];
    m.y_loadings.col(a) = qs[static_cast<std::size_t>(a)];
  }
  const Matrix PtW = m.x_loadings.transpose() * m.weights;
  m.coefficients = m.weights * PtW.partialPivLu().solve(m.y_loadings.transpose());
  return m;
}

inline Vector plsr_predict(const PLSRModel& m, const Vector& x) {
  if (x.size() != m.coefficients.rows()) throw DecodeError("plsr_predict: feature dimension mismatch");
  return m.y_mean + m.coefficients.transpose() * (x - m.x_mean);
}

inline Matrix plsr_predict(const PLSRModel& m, const Matrix& X) {
  if (X.cols() != m.coefficients.rows()) throw DecodeError("plsr_predict: feature dimension mismatch");
  return ((X.rowwise() - m.x_mean.transpose()) * m.coefficients).rowwise() + m.y_mean.transpose();
}

inline double exp_smooth(double prev, double x, double beta) { return beta * x + (1.0 - beta) * prev; }

// ---------------------------------------------------------------------------
// LDA

struct LDAModel {
  Vector mean_off;  // no-click class
  Vector mean_on;   // click class
  Matrix covariance;
  double prior_off{0.5};
  double prior_on{0.5};
  double ridge{0};  // diagonal loading added to make the covariance positive definite

  // Cached discriminant: logit = w.x + b.
  Vector w;
  double b{0};
};

/// Precomputes the linear discriminant; adds ridge loading when the covariance is singular.
inline void lda_prepare(LDAModel& m) {
  const auto d = m.covariance.rows();
  if (m.covariance.cols() != d || m.mean_on.size() != d || m.mean_off.size() != d)
    throw DecodeError("LDA: inconsistent dimensions");
  if (!(m.prior_on > 0 && m.prior_off > 0)) throw DecodeError("LDA: priors must be positive");
  Matrix S = 0.5 * (m.covariance + m.covariance.transpose());
  const double scale = std::max(S.trace() / static_cast<double>(d), 1e-12);
  double eps = m.ridge;
  for (int attempt = 0; attempt < 20; ++attempt) {
    Matrix R = S + eps * Matrix::Identity(d, d);
    Eigen::LLT<Matrix> llt(R);
    // Reject numerically singular factorizations as well as outright failures.
    if (llt.info() == Eigen::Success) {
      const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
      if (diag.minCoeff() > 1e-7 * std::sqrt(scale)) {
        m.ridge = eps;
        m.covariance = R;
        m.w = llt.solve(m.mean_on - m.mean_off);
        m.b = -0.5 * (m.mean_on + m.mean_off).dot(m.w) + std::log(m.prior_on / m.prior_off);
        return;
      }
    }
    eps = eps == 0 ? 1e-10 * scale : eps * 10.0;
  }
  throw DecodeError("LDA: covariance could not be regularized");
}

/// Fit with class-frequency priors and the pooled within-class covariance.
inline LDAModel lda_fit(const Matrix& X, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw DecodeError("lda_fit: label count mismatch");
  const auto d = X.cols();
  LDAModel m;
  m.mean_off = Vector::Zero(d);
  m.mean_on = Vector::Zero(d);
  double n_on = 0, n_off = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)]) {
      m.mean_on += X.row(i).transpose();
      ++n_on;
    } else {
      m.mean_off += X.row(i).transpose();
      ++n_off;
    }
  }
  if (n_on < 1 || n_off < 1) throw DecodeError("lda_fit: both classes need samples");
  m.mean_on /= n_on;
  m.mean_off /= n_off;
  m.covariance = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Vector r = X.row(i).transpose() - (labels[static_cast<std::size_t>(i)] ? m.mean_on : m.mean_off);
    m.covariance += r * r.transpose();
  }
  m.covariance /= std::max(1.0, n_on + n_off - 2.0);
  m.prior_on = n_on / (n_on + n_off);
  m.prior_off = 1.0 - m.prior_on;
  lda_prepare(m);
  return m;
}

/// Posterior probability of the click class under shared-covariance Gaussians.
inline double lda_posterior(const LDAModel& m, const Vector& x) {
  if (x.size() != m.w.size()) throw DecodeError("lda_posterior: feature dimension mismatch");
  const double logit = m.w.dot(x) + m.b;
  if (logit >= 0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// HMM click filter

struct HMMModel {
  // transition[i][j] = P(next = j | current = i); state 0 = OFF, 1 = ON.
  std::array<std::array<double, 2>, 2> transition{{{0.95, 0.05}, {0.1, 0.9}}};
  std::array<double, 2> belief{1.0, 0.0};
};

inline HMMModel make_hmm(double p_stay_off, double p_stay_on) {
  HMMModel h;
  h.transition = {{{p_stay_off, 1.0 - p_stay_off}, {1.0 - p_stay_on, p_stay_on}}};
  return h;
}

inline void validate(const HMMModel& h) {
  for (const auto& row : h.transition) {
    if (row[0] < 0 || row[1] < 0 || std::abs(row[0] + row[1] - 1.0) > 1e-12)
      throw DecodeError("HMM: transition rows must be probability vectors");
  }
}

inline std::array<double, 2> stationary(const HMMModel& h) {
  const double a = h.transition[0][1], b = h.transition[1][0];
  if (a + b <= 0) return {0.5, 0.5};
  return {b / (a + b), a / (a + b)};
}

struct HMMStep {
  std::array<double, 2> belief;
  bool click_on{false};
  bool reset{false};  // belief degenerated and was reset to the stationary distribution
};

/// Forward-filter step using the LDA click probability as the emission likelihood.
inline HMMStep hmm_filter_step(const std::array<double, 2>& belief, double lda_prob, const HMMModel& model) {
  const double p = std::clamp(lda_prob, 0.0, 1.0);
  const double pred_off = belief[0] * model.transition[0][0] + belief[1] * model.transition[1][0];
  const double pred_on = belief[0] * model.transition[0][1] + belief[1] * model.transition[1][1];
  double off = pred_off * (1.0 - p);
  double on = pred_on * p;
  const double sum = off + on;
  HMMStep s;
  if (!(sum > 0) || !std::isfinite(sum)) {
    s.belief = stationary(model);
    s.reset = true;
  } else {
    off /= sum;
    on /= sum;
    s.belief = {off, on};
  }
  s.click_on = s.belief[1] > 0.5;
  return s;
}

}  // namespace teledrive::decoder
