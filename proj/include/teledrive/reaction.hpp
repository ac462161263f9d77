#pragma once

// GO / NO-GO reaction-time tasks: schedule generation, outcome labeling,
// run metrics and a scripted synthetic operator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "teledrive/rng.hpp"

namespace teledrive {

enum class TrialKind { Go, NoGo };

inline const char* to_string(TrialKind k) { return k == TrialKind::Go ? "GO" : "NOGO"; }

inline constexpr double kValidRtMin = 50.0;    // ms
inline constexpr double kValidRtMax = 1000.0;  // ms

struct TrialSpec {
  int index{0};
  TrialKind kind{TrialKind::Go};
  double start{0};               // ms, absolute run time at which the trial/phase begins
  double stimulus_onset{0};      // ms after start
  double stimulus_duration{60};  // ms
  double length{0};              // ms; clicks in [start, start + length) belong to the trial
  bool auditory_cue{false};      // NO-GO marker of the simple task

  double onset_time() const { return start + stimulus_onset; }
  double end() const { return start + length; }
  friend bool operator==(const TrialSpec&, const TrialSpec&) = default;
};

struct BrakingTrial {
  TrialSpec nogo;  // cruising, no obstacle
  TrialSpec go;    // obstacle spawns at go.onset_time()
  friend bool operator==(const BrakingTrial&, const BrakingTrial&) = default;
};

struct SimpleRunConfig {
  int trials{50};
  int nogo_trials{10};
  double onset_min{1000}, onset_max{3000};  // ms
  double stimulus_duration{60};
  double response_window{kValidRtMax};  // ms after onset
  double inter_trial{1000};             // ms after the response window
};

/// 50 trials with 10 NO-GO catch trials at seeded positions and seeded-uniform onsets.
inline std::vector<TrialSpec> gen_simple_run(std::uint64_t seed, const SimpleRunConfig& cfg = {}) {
  if (cfg.nogo_trials > cfg.trials || cfg.trials <= 0) throw std::invalid_argument("gen_simple_run: bad counts");
  Rng rng(seed);
  std::vector<TrialKind> kinds(static_cast<std::size_t>(cfg.trials), TrialKind::Go);
  std::fill(kinds.begin(), kinds.begin() + cfg.nogo_trials, TrialKind::NoGo);
  rng.shuffle(kinds);

  std::vector<TrialSpec> out;
  double t = 0;
  for (int i = 0; i < cfg.trials; ++i) {
    TrialSpec s;
    s.index = i;
    s.kind = kinds[static_cast<std::size_t>(i)];
    s.start = t;
    s.stimulus_onset = rng.uniform(cfg.onset_min, cfg.onset_max);
    s.stimulus_duration = cfg.stimulus_duration;
    s.length = s.stimulus_onset + cfg.response_window + cfg.inter_trial;
    s.auditory_cue = s.kind == TrialKind::NoGo;
    t += s.length;
    out.push_back(s);
  }
  return out;
}

struct BrakingRunConfig {
  int trials{40};
  double nogo_min{3000}, nogo_max{6000};  // ms of cruising before the obstacle
  double go_length{6000};                 // ms; covers the 5 s time-to-collision
};

/// 40 trials, each a NO-GO cruising phase followed by a GO obstacle phase.
inline std::vector<BrakingTrial> gen_braking_run(std::uint64_t seed, const BrakingRunConfig& cfg = {}) {
  if (cfg.trials <= 0) throw std::invalid_argument("gen_braking_run: bad trial count");
  Rng rng(seed);
  std::vector<BrakingTrial> out;
  double t = 0;
  for (int i = 0; i < cfg.trials; ++i) {
    BrakingTrial bt;
    bt.nogo.index = i;
    bt.nogo.kind = TrialKind::NoGo;
    bt.nogo.start = t;
    bt.nogo.stimulus_onset = 0;
    bt.nogo.stimulus_duration = 0;
    bt.nogo.length = rng.uniform(cfg.nogo_min, cfg.nogo_max);
    t += bt.nogo.length;
    bt.go.index = i;
    bt.go.kind = TrialKind::Go;
    bt.go.start = t;
    bt.go.stimulus_onset = 0;
    bt.go.stimulus_duration = cfg.go_length;
    bt.go.length = cfg.go_length;
    t += bt.go.length;
    out.push_back(bt);
  }
  return out;
}

enum class OutcomeLabel { TP, TN, FP, FN };

inline const char* to_string(OutcomeLabel l) {
  switch (l) {
    case OutcomeLabel::TP: return "TP";
    case OutcomeLabel::TN: return "TN";
    case OutcomeLabel::FP: return "FP";
    case OutcomeLabel::FN: return "FN";
  }
  return "?";
}

struct TrialOutcome {
  OutcomeLabel label{OutcomeLabel::FN};
  std::optional<double> valid_rt;  // present iff label == TP
  int rejected_clicks{0};          // clicks stamped before the trial start

  friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

/// Labels one trial (or phase) from the click times (absolute ms) that belong to it.
///
/// A GO trial is TP only with exactly one click, landing 50-1000 ms after onset.
/// Any other click pattern on a GO trial is FP, except no click at all (FN).
/// `collided` marks a braking GO phase that ended in a collision; it can never be TP
/// and a lone valid click on it counts as a miss.
inline TrialOutcome label_trial(const TrialSpec& spec, const std::vector<double>& clicks, bool collided = false) {
  TrialOutcome out;
  std::vector<double> rel;
  for (double c : clicks) {
    if (c < spec.start) {
      ++out.rejected_clicks;
      continue;
    }
    rel.push_back(c - spec.onset_time());
  }

  if (spec.kind == TrialKind::NoGo) {
    out.label = rel.empty() ? OutcomeLabel::TN : OutcomeLabel::FP;
    return out;
  }
  if (rel.empty()) {
    out.label = OutcomeLabel::FN;
    return out;
  }
  const bool single_valid = rel.size() == 1 && rel[0] >= kValidRtMin && rel[0] <= kValidRtMax;
  if (single_valid && !collided) {
    out.label = OutcomeLabel::TP;
    out.valid_rt = rel[0];
  } else if (single_valid) {
    out.label = OutcomeLabel::FN;
  } else {
    out.label = OutcomeLabel::FP;
  }
  return out;
}

/// Clicks that fall inside [spec.start, spec.end()).
inline std::vector<double> clicks_in(const TrialSpec& spec, const std::vector<double>& clicks) {
  std::vector<double> out;
  for (double c : clicks)
    if (c >= spec.start && c < spec.end()) out.push_back(c);
  return out;
}

struct RTMetrics {
  int tp{0}, tn{0}, fp{0}, fn{0};
  std::optional<double> accuracy, sensitivity, specificity;
  std::vector<double> valid_rts;
  std::optional<double> rt_mean, rt_sd;
};

inline RTMetrics run_metrics(const std::vector<TrialOutcome>& outcomes) {
  RTMetrics m;
  for (const auto& o : outcomes) {
    switch (o.label) {
      case OutcomeLabel::TP: ++m.tp; break;
      case OutcomeLabel::TN: ++m.tn; break;
      case OutcomeLabel::FP: ++m.fp; break;
      case OutcomeLabel::FN: ++m.fn; break;
    }
    if (o.valid_rt) m.valid_rts.push_back(*o.valid_rt);
  }
  auto ratio = [](int num, int den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / den;
  };
  m.accuracy = ratio(m.tp + m.tn, m.tp + m.tn + m.fp + m.fn);
  m.sensitivity = ratio(m.tp, m.tp + m.fn);
  m.specificity = ratio(m.tn, m.tn + m.fp);
  if (!m.valid_rts.empty()) {
    // Sorted accumulation keeps the mean independent of trial order.
    std::vector<double> rts = m.valid_rts;
    std::sort(rts.begin(), rts.end());
    double sum = 0;
    for (double v : rts) sum += v;
    m.rt_mean = sum / static_cast<double>(rts.size());
    if (rts.size() > 1) {
      double ss = 0;
      for (double v : rts) ss += (v - *m.rt_mean) * (v - *m.rt_mean);
      m.rt_sd = std::sqrt(ss / static_cast<double>(rts.size() - 1));
    }
  }
  return m;
}

struct LatencyDistribution {
  double mean{300};  // ms
  double sd{0};      // ms; 0 gives a fixed latency
  double min{0};
};

struct ErrorRates {
  double false_positive{0};  // probability of clicking on a NO-GO trial
  double miss{0};            // probability of not clicking on a GO trial
};

/// Synthetic participant: one click per responded trial at onset + sampled latency.
class ScriptedOperator {
 public:
  ScriptedOperator(LatencyDistribution latency, ErrorRates errors, std::uint64_t seed)
      : latency_(latency), errors_(errors), rng_(seed) {}

  /// Click time for the trial, if the operator responds.
  std::optional<double> respond(const TrialSpec& spec) {
    const double roll = rng_.uniform();
    const double lat = std::max(latency_.min, latency_.sd > 0 ? rng_.normal(latency_.mean, latency_.sd)
                                                              : latency_.mean);
    const bool responds = spec.kind == TrialKind::Go ? roll >= errors_.miss : roll < errors_.false_positive;
    if (!responds) return std::nullopt;
    return spec.onset_time() + lat;
  }

 private:
  LatencyDistribution latency_;
  ErrorRates errors_;
  Rng rng_;
};

/// Click stream for a whole schedule, in trial order.
inline std::vector<double> scripted_operator(const std::vector<TrialSpec>& trials, LatencyDistribution latency,
                                             ErrorRates errors, std::uint64_t seed) {
  ScriptedOperator op(latency, errors, seed);
  std::vector<double> clicks;
  for (const auto& t : trials)
    if (auto c = op.respond(t)) clicks.push_back(*c);
  return clicks;
}

}  // namespace teledrive
