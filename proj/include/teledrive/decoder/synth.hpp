#pragma once

// Synthetic broadband generator standing in for implanted recordings: every
// channel is a fixed random linear mixture of the intended cursor velocity and
// click, plus white Gaussian noise scaled to a target SNR.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "teledrive/decoder/fenet.hpp"
#include "teledrive/rng.hpp"

namespace teledrive::decoder {

struct IntentSample {
  double vx{0}, vy{0};  // normalized overlay units / s
  bool click{false};
};

struct SynthConfig {
  std::size_t channels{8};
  double sample_rate{30000};  // Hz
  double bin_rate{30};        // Hz, one window per bin
  double snr{10};             // signal RMS / noise RMS per channel; infinity = noiseless

  std::size_t samples_per_bin() const { return static_cast<std::size_t>(std::llround(sample_rate / bin_rate)); }
};

class SignalSynthesizer {
 public:
  // `seed` fixes the channel mixing; `noise_seed` the noise stream.
  SignalSynthesizer(const SynthConfig& cfg, std::uint64_t seed, std::uint64_t noise_seed)
      : cfg_(cfg), rng_(noise_seed) {
    Rng mix(seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t c = 0; c < cfg.channels; ++c) {
      Channel ch;
      for (double& w : ch.weights) w = mix.normal();
      ch.baseline = mix.normal(0.0, 0.5);
      const double rms = std::sqrt(ch.weights[0] * ch.weights[0] + ch.weights[1] * ch.weights[1] +
                                   ch.weights[2] * ch.weights[2]);
      ch.noise_sd = std::isinf(cfg.snr) ? 0.0 : rms / cfg.snr;
      channels_.push_back(ch);
    }
  }

  BroadbandWindow window(const IntentSample& intent) {
    BroadbandWindow w(cfg_.channels, cfg_.samples_per_bin(), cfg_.sample_rate);
    const double click = intent.click ? 1.0 : 0.0;
    for (std::size_t c = 0; c < cfg_.channels; ++c) {
      const Channel& ch = channels_[c];
      const double level =
          ch.baseline + ch.weights[0] * intent.vx + ch.weights[1] * intent.vy + ch.weights[2] * click;
      auto out = w.channel(c);
      if (ch.noise_sd == 0.0) {
        std::fill(out.begin(), out.end(), level);
      } else {
        for (double& v : out) v = level + ch.noise_sd * rng_.normal();
      }
    }
    return w;
  }

  SignalSynthesizer(const SynthConfig& cfg, std::uint64_t seed) : SignalSynthesizer(cfg, seed, seed) {}

  const SynthConfig& config() const { return cfg_; }

 private:
  struct Channel {
    std::array<double, 3> weights{};
    double baseline{0};
    double noise_sd{0};
  };
  SynthConfig cfg_;
  Rng rng_;
  std::vector<Channel> channels_;
};

struct SynthSession {
  std::vector<BroadbandWindow> windows;
  std::vector<IntentSample> labels;
};

inline SynthSession synth_session(const std::vector<IntentSample>& trace, const SynthConfig& cfg, std::uint64_t seed) {
  SignalSynthesizer gen(cfg, seed);
  SynthSession s;
  s.windows.reserve(trace.size());
  for (const auto& i : trace) s.windows.push_back(gen.window(i));
  s.labels = trace;
  return s;
}

/// Smooth random intent for calibration: Ornstein-Uhlenbeck velocities within
/// +-vmax and short click bursts.
inline std::vector<IntentSample> training_intent(std::size_t bins, std::uint64_t seed, double bin_rate = 30,
                                                 double vmax = 1.5, double click_rate = 0.5) {
  Rng rng(seed);
  std::vector<IntentSample> out;
  out.reserve(bins);
  const double dt = 1.0 / bin_rate;
  const double theta = 1.5, sigma = 1.2;
  double vx = 0, vy = 0;
  int click_left = 0;
  for (std::size_t i = 0; i < bins; ++i) {
    vx += -theta * vx * dt + sigma * std::sqrt(dt) * rng.normal();
    vy += -theta * vy * dt + sigma * std::sqrt(dt) * rng.normal();
    vx = std::clamp(vx, -vmax, vmax);
    vy = std::clamp(vy, -vmax, vmax);
    if (click_left == 0 && rng.bernoulli(click_rate * dt)) click_left = 6;
    out.push_back({vx, vy, click_left > 0});
    if (click_left > 0) --click_left;
  }
  return out;
}

}  // namespace teledrive::decoder
