#pragma once

// Streaming decode: window -> features -> z-scores -> PLSR velocity ->
// exponential smoothing -> integrated cursor position, and in parallel
// z-scores -> LDA click probability -> HMM click state.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <array>
#include <vector>

#include <json.hpp>

#include "teledrive/decoder/fenet.hpp"
#include "teledrive/decoder/models.hpp"
#include "teledrive/decoder/synth.hpp"

namespace teledrive::decoder {

struct DecoderModels {
  FENetConfig fenet{haar_fenet()};
  ZScoreModel zscore;
  PLSRModel plsr;
  LDAModel lda;
  HMMModel hmm;
  double smoothing{0.5};  // beta of the velocity smoother
  double bin_rate{30};
};

struct DecodeOutput {
  double vx{0}, vy{0};
  double x{0.5}, y{0.5};
  bool click{false};
  double click_prob{0};
};

struct TrainOptions {
  std::size_t components{6};
  double smoothing{0.5};
  double hmm_stay_off{0.9};
  double hmm_stay_on{0.8};
};

inline Matrix feature_matrix(const std::vector<BroadbandWindow>& windows, const FENetConfig& cfg) {
  if (windows.empty()) throw DecodeError("feature_matrix: no windows");
  std::vector<std::vector<double>> rows;
  rows.reserve(windows.size());
  for (const auto& w : windows) rows.push_back(fenet_extract(w, cfg));
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    X.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), X.cols());
  return X;
}

/// Calibrates every decode stage on a labeled synthetic session.
inline DecoderModels train_decoder(const SynthSession& session, const FENetConfig& fenet, double bin_rate,
                                   const TrainOptions& opt = {}) {
  DecoderModels m;
  m.fenet = fenet;
  m.bin_rate = bin_rate;
  m.smoothing = opt.smoothing;
  const Matrix X = feature_matrix(session.windows, fenet);
  m.zscore = zscore_fit(X);
  const Matrix Z = zscore_apply(m.zscore, X);
  Matrix Y(Z.rows(), 2);
  std::vector<int> clicks;
  for (std::size_t i = 0; i < session.labels.size(); ++i) {
    Y(static_cast<Eigen::Index>(i), 0) = session.labels[i].vx;
    Y(static_cast<Eigen::Index>(i), 1) = session.labels[i].vy;
    clicks.push_back(session.labels[i].click ? 1 : 0);
  }
  m.plsr = plsr_fit(Z, Y, std::min<std::size_t>(opt.components, static_cast<std::size_t>(Z.cols())));
  m.lda = lda_fit(Z, clicks);
  m.hmm = make_hmm(opt.hmm_stay_off, opt.hmm_stay_on);
  return m;
}

class DecoderPipeline {
 public:
  explicit DecoderPipeline(DecoderModels models, double x0 = 0.5, double y0 = 0.5)
      : m_(std::move(models)), belief_(m_.hmm.belief) {
    validate(m_.hmm);
    out_.x = x0;
    out_.y = y0;
  }

  const DecodeOutput& step(const BroadbandWindow& window) {
    const std::vector<double> f = fenet_extract(window, m_.fenet);
    const Vector z = zscore_apply(m_.zscore, f);
    const Vector v = plsr_predict(m_.plsr, z);
    out_.vx = exp_smooth(out_.vx, v[0], m_.smoothing);
    out_.vy = exp_smooth(out_.vy, v[1], m_.smoothing);
    const double dt = 1.0 / m_.bin_rate;
    out_.x = std::clamp(out_.x + out_.vx * dt, 0.0, 1.0);
    out_.y = std::clamp(out_.y + out_.vy * dt, 0.0, 1.0);
    out_.click_prob = lda_posterior(m_.lda, z);
    const HMMStep h = hmm_filter_step(belief_, out_.click_prob, m_.hmm);
    belief_ = h.belief;
    resets_ += h.reset ? 1 : 0;
    out_.click = h.click_on;
    return out_;
  }

  const DecodeOutput& output() const { return out_; }
  const DecoderModels& models() const { return m_; }
  int belief_resets() const { return resets_; }

 private:
  DecoderModels m_;
  std::array<double, 2> belief_;
  DecodeOutput out_;
  int resets_{0};
};

// ---------------------------------------------------------------------------
// Model persistence: versioned JSON, matrices as nested arrays.

namespace model_io_detail {

using nlohmann::json;

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Matrix matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols)
      throw DecodeError("model file: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Vector vector_from(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace model_io_detail

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const DecoderModels& m) {
  using namespace model_io_detail;
  json j;
  j["version"] = kModelFormatVersion;
  j["bin_rate"] = m.bin_rate;
  j["smoothing"] = m.smoothing;
  j["fenet"] = {{"num_modules", m.fenet.num_modules},
                {"upper_filters", m.fenet.upper_filters},
                {"lower_filters", m.fenet.lower_filters},
                {"leaky_slope", m.fenet.leaky_slope},
                {"emit_final_lower", m.fenet.emit_final_lower}};
  j["zscore"] = {{"input_dim", m.zscore.input_dim},
                 {"kept", m.zscore.kept},
                 {"dropped", m.zscore.dropped},
                 {"means", to_json(m.zscore.means)},
                 {"stds", to_json(m.zscore.stds)}};
  j["plsr"] = {{"n_components", m.plsr.n_components},
               {"weights", to_json(m.plsr.weights)},
               {"x_loadings", to_json(m.plsr.x_loadings)},
               {"y_loadings", to_json(m.plsr.y_loadings)},
               {"coefficients", to_json(m.plsr.coefficients)},
               {"x_mean", to_json(m.plsr.x_mean)},
               {"y_mean", to_json(m.plsr.y_mean)}};
  j["lda"] = {{"mean_off", to_json(m.lda.mean_off)},
              {"mean_on", to_json(m.lda.mean_on)},
              {"covariance", to_json(m.lda.covariance)},
              {"prior_off", m.lda.prior_off},
              {"prior_on", m.lda.prior_on},
              {"ridge", m.lda.ridge}};
  j["hmm"] = {{"transition", m.hmm.transition}, {"belief", m.hmm.belief}};
  return j;
}

inline DecoderModels models_from_json(const nlohmann::json& j) {
  using namespace model_io_detail;
  if (j.value("version", 0) != kModelFormatVersion) throw DecodeError("model file: unsupported version");
  try {
    DecoderModels m;
    m.bin_rate = j.at("bin_rate").get<double>();
    m.smoothing = j.at("smoothing").get<double>();
    const auto& f = j.at("fenet");
    m.fenet.num_modules = f.at("num_modules").get<std::size_t>();
    m.fenet.upper_filters = f.at("upper_filters").get<std::vector<std::vector<double>>>();
    m.fenet.lower_filters = f.at("lower_filters").get<std::vector<std::vector<double>>>();
    m.fenet.leaky_slope = f.at("leaky_slope").get<double>();
    m.fenet.emit_final_lower = f.at("emit_final_lower").get<bool>();
    validate(m.fenet);
    const auto& z = j.at("zscore");
    m.zscore.input_dim = z.at("input_dim").get<std::size_t>();
    m.zscore.kept = z.at("kept").get<std::vector<std::size_t>>();
    m.zscore.dropped = z.at("dropped").get<std::vector<std::size_t>>();
    m.zscore.means = vector_from(z.at("means"));
    m.zscore.stds = vector_from(z.at("stds"));
    const auto& p = j.at("plsr");
    m.plsr.n_components = p.at("n_components").get<std::size_t>();
    m.plsr.weights = matrix_from(p.at("weights"));
    m.plsr.x_loadings = matrix_from(p.at("x_loadings"));
    m.plsr.y_loadings = matrix_from(p.at("y_loadings"));
    m.plsr.coefficients = matrix_from(p.at("coefficients"));
    m.plsr.x_mean = vector_from(p.at("x_mean"));
    m.plsr.y_mean = vector_from(p.at("y_mean"));
    const auto& l = j.at("lda");
    m.lda.mean_off = vector_from(l.at("mean_off"));
    m.lda.mean_on = vector_from(l.at("mean_on"));
    m.lda.covariance = matrix_from(l.at("covariance"));
    m.lda.prior_off = l.at("prior_off").get<double>();
    m.lda.prior_on = l.at("prior_on").get<double>();
    m.lda.ridge = 0;  // the stored covariance already carries the loading
    lda_prepare(m.lda);
    m.lda.ridge = l.at("ridge").get<double>();
    m.hmm.transition = j.at("hmm").at("transition").get<std::array<std::array<double, 2>, 2>>();
    m.hmm.belief = j.at("hmm").at("belief").get<std::array<double, 2>>();
    validate(m.hmm);
    if (m.zscore.means.size() != static_cast<Eigen::Index>(m.zscore.kept.size()) ||
        m.plsr.coefficients.rows() != static_cast<Eigen::Index>(m.zscore.kept.size()))
      throw DecodeError("model file: inconsistent dimensions");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("model file: ") + e.what());
  }
}

inline void save_models(const DecoderModels& m, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw DecodeError("cannot write model file: " + file.string());
  out << to_json(m).dump(2) << '\n';
}

inline DecoderModels load_models(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DecodeError("cannot open model file: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError("model file " + file.string() + ": " + e.what());
  }
  return models_from_json(j);
}

}  // namespace teledrive::decoder
