#pragma once

// Independent reference implementations used as test oracles. Written from the
// definitions, deliberately without sharing code with the library.

#include <cmath>
#include <string>
#include <vector>

#include "teledrive/decoder/fenet.hpp"
#include "teledrive/reaction.hpp"

namespace oracle {

/// Brute-force trial labeler: scans the whole click list for every trial.
inline std::string label(const teledrive::TrialSpec& t, const std::vector<double>& all_clicks, bool collided,
                         double* rt_out = nullptr) {
  std::vector<double> mine;
  for (double c : all_clicks)
    if (!(c < t.start) && c < t.start + t.length) mine.push_back(c);
  if (t.kind == teledrive::TrialKind::NoGo) return mine.empty() ? "TN" : "FP";
  if (mine.empty()) return "FN";
  if (mine.size() > 1) return "FP";
  const double rt = mine[0] - (t.start + t.stimulus_onset);
  if (rt < 50.0 || rt > 1000.0) return "FP";
  if (collided) return "FN";
  if (rt_out) *rt_out = rt;
  return "TP";
}

/// FENet by explicit index arithmetic: full convolution restricted to the
/// fully-overlapping region, stride-2 pooling of the upper branch.
inline std::vector<double> fenet(const teledrive::decoder::BroadbandWindow& w,
                                 const teledrive::decoder::FENetConfig& cfg) {
  std::vector<double> feats;
  for (std::size_t c = 0; c < w.channels; ++c) {
    std::vector<double> x(w.data.begin() + static_cast<long>(c * w.samples_per_channel),
                          w.data.begin() + static_cast<long>((c + 1) * w.samples_per_channel));
    for (std::size_t m = 0; m < cfg.num_modules; ++m) {
      const auto& hu = cfg.upper_filters[m];
      const auto& hl = cfg.lower_filters[m];
      // full[n] = sum_k h[k] x[n - k]; keep n in [L-1, N-1].
      auto conv = [&](const std::vector<double>& h) {
        std::vector<double> y;
        const long N = static_cast<long>(x.size()), L = static_cast<long>(h.size());
        for (long n = L - 1; n < N; ++n) {
          double s = 0;
          for (long k = 0; k < L; ++k) s += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(n - k)];
          y.push_back(s);
        }
        return y;
      };
      const std::vector<double> up = conv(hu);
      double acc = 0;
      int cnt = 0;
      for (std::size_t n = 0; n < up.size(); ++n) {
        if (n % 2) continue;
        acc += up[n] >= 0 ? up[n] : up[n] * cfg.leaky_slope;
        ++cnt;
      }
      feats.push_back(acc / cnt);
      if (m + 1 < cfg.num_modules || cfg.emit_final_lower) x = conv(hl);
    }
    if (cfg.emit_final_lower) {
      double s = 0;
      for (double v : x) s += v;
      feats.push_back(s / static_cast<double>(x.size()));
    }
  }
  return feats;
}

/// Closed-form simple regression y = a + b x.
struct Line {
  double a, b;
};
inline Line ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {(sy - b * sx) / n, b};
}

/// Gaussian density with full covariance in 2-D, evaluated by hand.
inline double gauss2(double x0, double x1, double m0, double m1, double s00, double s01, double s11) {
  const double det = s00 * s11 - s01 * s01;
  const double d0 = x0 - m0, d1 = x1 - m1;
  const double q = (s11 * d0 * d0 - 2 * s01 * d0 * d1 + s00 * d1 * d1) / det;
  return std::exp(-0.5 * q) / (2 * M_PI * std::sqrt(det));
}

inline int flips(const std::vector<bool>& v) {
  int n = 0;
  for (std::size_t i = 1; i < v.size(); ++i) n += v[i] != v[i - 1];
  return n;
}

}  // namespace oracle
