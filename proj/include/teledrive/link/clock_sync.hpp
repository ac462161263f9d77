#pragma once

// Four-timestamp clock offset estimation and lag bookkeeping.

#include <algorithm>
#include <deque>
#include <optional>
#include <vector>

#include "teledrive/link/frames.hpp"

namespace teledrive::link {

struct OffsetEstimate {
  double offset{0};  // responder clock minus requester clock, ms
  double rtt{0};     // ms, excluding responder processing time
};

/// offset = ((t1 - t0) + (t2 - t3)) / 2, rtt = (t3 - t0) - (t2 - t1).
/// Probes with negative rtt are discarded.
inline std::optional<OffsetEstimate> estimate_offset(const ClockProbe& p) {
  const double rtt = (p.t3 - p.t0) - (p.t2 - p.t1);
  if (rtt < 0) return std::nullopt;
  return OffsetEstimate{((p.t1 - p.t0) + (p.t2 - p.t3)) / 2.0, rtt};
}

/// Median of the offsets from the most recent `window` accepted probes.
class ClockSync {
 public:
  explicit ClockSync(std::size_t window = 8) : window_(window) {}

  bool add(const ClockProbe& p) {
    const auto e = estimate_offset(p);
    if (!e) return false;
    offsets_.push_back(e->offset);
    last_rtt_ = e->rtt;
    if (offsets_.size() > window_) offsets_.pop_front();
    return true;
  }

  std::optional<double> offset() const {
    if (offsets_.empty()) return std::nullopt;
    std::vector<double> v(offsets_.begin(), offsets_.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }

  double last_rtt() const { return last_rtt_; }
  std::size_t samples() const { return offsets_.size(); }

 private:
  std::size_t window_;
  std::deque<double> offsets_;
  double last_rtt_{0};
};

/// Age of a frame stamped `t_send` on the sender clock, seen at `now` on the
/// receiver clock. `offset` maps sender time onto the receiver clock
/// (receiver minus sender). Never negative.
inline double lag_monitor(double now, double t_send, double offset) {
  return std::max(0.0, now - (t_send + offset));
}

/// Glass-to-glass latency of a frame captured at `source_time` (source clock)
/// and displayed at `display_time` (display clock).
inline double glass_to_glass_probe(double source_time, double display_time, double offset = 0.0) {
  return display_time - (source_time + offset);
}

}  // namespace teledrive::link
