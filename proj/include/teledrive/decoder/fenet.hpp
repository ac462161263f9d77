#pragma once

// Cascaded dual-branch 1-D convolutional feature extractor.
//
// Each module convolves its input with two filters. The upper output is
// downsampled by two, passed through a leaky ReLU and mean-pooled to a single
// feature. The lower output (not downsampled) feeds the next module; the last
// lower output is optionally pooled into one more feature.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace teledrive::decoder {

struct BroadbandWindow {
  std::size_t channels{0};
  std::size_t samples_per_channel{0};
  std::vector<double> data;  // channel-major: data[c * samples_per_channel + n]
  double sample_rate{30000};

  BroadbandWindow() = default;
  BroadbandWindow(std::size_t ch, std::size_t n, double rate = 30000)
      : channels(ch), samples_per_channel(n), data(ch * n, 0.0), sample_rate(rate) {}

  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(data).subspan(c * samples_per_channel, samples_per_channel);
  }
  std::span<double> channel(std::size_t c) {
    return std::span<double>(data).subspan(c * samples_per_channel, samples_per_channel);
  }
};

struct FENetConfig {
  std::size_t num_modules{3};
  std::vector<std::vector<double>> upper_filters;
  std::vector<std::vector<double>> lower_filters;
  double leaky_slope{0.01};
  bool emit_final_lower{true};

  std::size_t features_per_channel() const { return num_modules + (emit_final_lower ? 1 : 0); }
};

/// Haar-like defaults: highpass upper filter, lowpass lower filter in every module.
inline FENetConfig haar_fenet(std::size_t modules = 3) {
  FENetConfig cfg;
  cfg.num_modules = modules;
  const double h = 1.0 / std::numbers::sqrt2;
  cfg.upper_filters.assign(modules, {h, -h});
  cfg.lower_filters.assign(modules, {h, h});
  return cfg;
}

inline void validate(const FENetConfig& cfg) {
  if (cfg.num_modules == 0) throw std::invalid_argument("FENet: need at least one module");
  if (cfg.upper_filters.size() != cfg.num_modules || cfg.lower_filters.size() != cfg.num_modules)
    throw std::invalid_argument("FENet: one upper and one lower filter per module required");
  for (std::size_t i = 0; i < cfg.num_modules; ++i)
    if (cfg.upper_filters[i].empty() || cfg.lower_filters[i].empty())
      throw std::invalid_argument("FENet: filters need at least one tap");
  if (!(cfg.leaky_slope > 0 && cfg.leaky_slope < 1)) throw std::invalid_argument("FENet: leaky slope must lie in (0,1)");
}

/// Shortest window the cascade accepts.
inline std::size_t fenet_min_length(const FENetConfig& cfg) {
  std::size_t need = std::size_t{1} << cfg.num_modules;
  std::size_t shrink = 0;
  for (std::size_t i = 0; i < cfg.num_modules; ++i) {
    const bool lower_used = i + 1 < cfg.num_modules || cfg.emit_final_lower;
    std::size_t here = cfg.upper_filters[i].size();
    if (lower_used) here = std::max(here, cfg.lower_filters[i].size());
    need = std::max(need, here + shrink);
    shrink += cfg.lower_filters[i].size() - 1;
  }
  return need;
}

namespace fenet_detail {

// Valid-mode convolution: y[n] = sum_k h[k] x[n + L - 1 - k], length N - L + 1.
inline void convolve_valid(std::span<const double> x, std::span<const double> h, std::vector<double>& y) {
  const std::size_t L = h.size();
  y.resize(x.size() - L + 1);
  for (std::size_t n = 0; n < y.size(); ++n) {
    double acc = 0;
    for (std::size_t k = 0; k < L; ++k) acc += h[k] * x[n + L - 1 - k];
    y[n] = acc;
  }
}

}  // namespace fenet_detail

/// Features of one channel, appended to `out`.
inline void fenet_channel(std::span<const double> signal, const FENetConfig& cfg, std::vector<double>& out) {
  std::vector<double> input(signal.begin(), signal.end());
  std::vector<double> upper, lower;
  for (std::size_t i = 0; i < cfg.num_modules; ++i) {
    fenet_detail::convolve_valid(input, cfg.upper_filters[i], upper);
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < upper.size(); n += 2) {
      const double v = upper[n];
      sum += v > 0 ? v : cfg.leaky_slope * v;
      ++count;
    }
    out.push_back(sum / static_cast<double>(count));
    if (i + 1 < cfg.num_modules || cfg.emit_final_lower) {
      fenet_detail::convolve_valid(input, cfg.lower_filters[i], lower);
      input.swap(lower);
    }
  }
  if (cfg.emit_final_lower) {
    double sum = 0;
    for (double v : input) sum += v;
    out.push_back(sum / static_cast<double>(input.size()));
  }
}

/// Feature vector for a window, channel-major: channel c owns
/// [c * features_per_channel, (c + 1) * features_per_channel).
inline std::vector<double> fenet_extract(const BroadbandWindow& window, const FENetConfig& cfg) {
  validate(cfg);
  const std::size_t need = fenet_min_length(cfg);
  if (window.samples_per_channel < need)
    throw std::invalid_argument("fenet_extract: window has " + std::to_string(window.samples_per_channel) +
                                " samples per channel, needs at least " + std::to_string(need));
  if (window.data.size() != window.channels * window.samples_per_channel)
    throw std::invalid_argument("fenet_extract: channels have unequal lengths");
  std::vector<double> features;
  features.reserve(window.channels * cfg.features_per_channel());
  for (std::size_t c = 0; c < window.channels; ++c) fenet_channel(window.channel(c), cfg, features);
  return features;
}

}  // namespace teledrive::decoder
