#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace teledrive {

enum class InfractionKind { Collision, LaneDeviation, RanStop, RanRed };

inline const char* to_string(InfractionKind k) {
  switch (k) {
    case InfractionKind::Collision: return "collision";
    case InfractionKind::LaneDeviation: return "lane_deviation";
    case InfractionKind::RanStop: return "ran_stop";
    case InfractionKind::RanRed: return "ran_red";
  }
  return "?";
}

inline InfractionKind infraction_kind_from_string(const std::string& s) {
  if (s == "collision") return InfractionKind::Collision;
  if (s == "lane_deviation") return InfractionKind::LaneDeviation;
  if (s == "ran_stop") return InfractionKind::RanStop;
  if (s == "ran_red") return InfractionKind::RanRed;
  throw std::invalid_argument("unknown infraction kind: " + s);
}

struct InfractionEvent {
  InfractionKind kind{InfractionKind::Collision};
  double t{0};         // ms
  double weight{1.0};  // 1.0, or 0.5 for an uncertain evaluator mark
  std::string source;  // id of the obstacle/sign/light/lane involved

  friend bool operator==(const InfractionEvent&, const InfractionEvent&) = default;
};

}  // namespace teledrive
