#pragma once

// Infraction-weighted driving score and evaluator aggregation.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "teledrive/vehicle/infractions.hpp"

namespace teledrive {

enum class TaskMode { Mcity, Town, Obstacle };

inline const char* to_string(TaskMode m) {
  switch (m) {
    case TaskMode::Mcity: return "mcity";
    case TaskMode::Town: return "town";
    case TaskMode::Obstacle: return "obstacle";
  }
  return "?";
}

inline TaskMode task_mode_from_string(const std::string& s) {
  if (s == "mcity") return TaskMode::Mcity;
  if (s == "town") return TaskMode::Town;
  if (s == "obstacle") return TaskMode::Obstacle;
  throw std::invalid_argument("unknown task mode: " + s);
}

struct InfractionCounts {
  double completion{1.0};  // C
  double collisions{0};    // N_c
  double lane_deviations{0};  // N_l
  double signal_violations{0};  // N_s: stop signs or red lights

  friend bool operator==(const InfractionCounts&, const InfractionCounts&) = default;
};

inline constexpr double kCollisionFactor = 0.8;
inline constexpr double kLaneFactor = 0.9;
inline constexpr double kSignalFactor = 0.9;

inline void validate(const InfractionCounts& c) {
  if (!(c.completion >= 0.0 && c.completion <= 1.0))
    throw std::invalid_argument("driving_score: completion must lie in [0,1]");
  if (!(c.collisions >= 0) || !(c.lane_deviations >= 0) || !(c.signal_violations >= 0))
    throw std::invalid_argument("driving_score: infraction counts must be non-negative");
}

/// C * 0.8^Nc * 0.9^Nl * 0.9^Ns. Mcity runs ignore signs (Ns forced to 0).
inline double driving_score(const InfractionCounts& c, TaskMode mode) {
  validate(c);
  const double ns = mode == TaskMode::Mcity ? 0.0 : c.signal_violations;
  return c.completion * std::pow(kCollisionFactor, c.collisions) * std::pow(kLaneFactor, c.lane_deviations) *
         std::pow(kSignalFactor, ns);
}

/// True when every count is a whole or half step, as evaluator sheets require.
inline bool half_step_counts(const InfractionCounts& c) {
  auto ok = [](double v) { return std::floor(v * 2.0) == v * 2.0; };
  return ok(c.collisions) && ok(c.lane_deviations) && ok(c.signal_violations);
}

struct EvaluatorSheet {
  std::string evaluator;
  std::vector<InfractionCounts> runs;
  std::string notes;
};

struct RunScore {
  std::vector<double> per_evaluator;
  double mean{0};
  double sd{0};  // sample SD across evaluators, 0 for a single evaluator
};

struct ScoreReport {
  TaskMode mode{TaskMode::Obstacle};
  std::vector<RunScore> runs;
};

/// Scores every run per evaluator, then averages the scores across evaluators.
inline ScoreReport aggregate_evaluators(const std::vector<EvaluatorSheet>& sheets, TaskMode mode) {
  if (sheets.empty()) throw std::invalid_argument("aggregate_evaluators: no evaluator sheets");
  const std::size_t n_runs = sheets.front().runs.size();
  for (const auto& s : sheets) {
    if (s.runs.size() != n_runs)
      throw std::invalid_argument("aggregate_evaluators: sheet '" + s.evaluator + "' has a different run count");
    for (const auto& c : s.runs)
      if (!half_step_counts(c))
        throw std::invalid_argument("aggregate_evaluators: sheet '" + s.evaluator + "' has a non half-step count");
  }

  ScoreReport report{mode, {}};
  report.runs.reserve(n_runs);
  for (std::size_t r = 0; r < n_runs; ++r) {
    RunScore rs;
    for (const auto& s : sheets) rs.per_evaluator.push_back(driving_score(s.runs[r], mode));
    // Offsets from the first score keep identical sheets exact (mean = score, sd = 0).
    const double base = rs.per_evaluator.front();
    double sum = 0;
    for (double v : rs.per_evaluator) sum += v - base;
    rs.mean = base + sum / static_cast<double>(rs.per_evaluator.size());
    if (rs.per_evaluator.size() > 1) {
      double ss = 0;
      for (double v : rs.per_evaluator) ss += (v - rs.mean) * (v - rs.mean);
      rs.sd = std::sqrt(ss / static_cast<double>(rs.per_evaluator.size() - 1));
    }
    report.runs.push_back(std::move(rs));
  }
  return report;
}

struct RouteOutcome {
  double completion{1.0};
  bool aborted{false};
};

/// Sums simulator events by kind; red lights and stop signs both count toward Ns.
inline InfractionCounts counts_from_events(const std::vector<InfractionEvent>& events, const RouteOutcome& outcome) {
  InfractionCounts c;
  c.completion = std::clamp(outcome.completion, 0.0, 1.0);
  for (const auto& e : events) {
    switch (e.kind) {
      case InfractionKind::Collision: c.collisions += e.weight; break;
      case InfractionKind::LaneDeviation: c.lane_deviations += e.weight; break;
      case InfractionKind::RanStop:
      case InfractionKind::RanRed: c.signal_violations += e.weight; break;
    }
  }
  return c;
}

}  // namespace teledrive
