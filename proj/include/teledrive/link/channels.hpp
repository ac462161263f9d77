#pragma once

// In-process link with impairment injection, driven by simulated time.
//
// The control stream is reliable and ordered (bytes go through the stream
// codec). State and clock flows are datagrams: each may be dropped, delayed and
// jittered independently, so they can also arrive out of order.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "teledrive/link/codec.hpp"
#include "teledrive/rng.hpp"

namespace teledrive::link {

struct Impairment {
  double delay{0};   // ms, base one-way delay
  double jitter{0};  // ms, extra uniform delay in [0, jitter)
  double loss{0};    // drop probability for datagrams
};

struct LinkConfig {
  Impairment control{20, 0, 0};
  Impairment state{20, 5, 0};
  Impairment clock{20, 5, 0};
  std::uint64_t seed{1};
};

/// Reliable, ordered byte stream. Delivery time never precedes that of an earlier send.
class ReliableStream {
 public:
  explicit ReliableStream(Impairment imp, std::uint64_t seed) : imp_(imp), rng_(seed) {}

  void set_impairment(Impairment imp) { imp_ = imp; }
  const Impairment& impairment() const { return imp_; }

  void send(std::string bytes, double now) {
    double at = now + imp_.delay + (imp_.jitter > 0 ? rng_.uniform(0, imp_.jitter) : 0.0);
    if (!queue_.empty() && at < queue_.back().at) at = queue_.back().at;
    queue_.push_back({at, std::move(bytes)});
  }

  /// Bytes whose delivery time has come, concatenated in send order.
  std::string receive(double now) {
    std::string out;
    while (!queue_.empty() && queue_.front().at <= now) {
      out += queue_.front().bytes;
      queue_.pop_front();
    }
    return out;
  }

  std::size_t in_flight() const { return queue_.size(); }

 private:
  struct Pending {
    double at;
    std::string bytes;
  };
  Impairment imp_;
  Rng rng_;
  std::deque<Pending> queue_;
};

/// Best-effort datagram flow.
class DatagramFlow {
 public:
  explicit DatagramFlow(Impairment imp, std::uint64_t seed) : imp_(imp), rng_(seed) {}

  void set_impairment(Impairment imp) { imp_ = imp; }
  const Impairment& impairment() const { return imp_; }

  /// Returns false when the datagram was dropped.
  bool send(std::string payload, double now) {
    const double roll = rng_.uniform();
    const double extra = imp_.jitter > 0 ? rng_.uniform(0, imp_.jitter) : 0.0;
    ++sent_;
    if (roll < imp_.loss) {
      ++dropped_;
      return false;
    }
    pending_.push_back({now + imp_.delay + extra, order_++, std::move(payload)});
    return true;
  }

  /// Datagrams due by `now`, ordered by arrival time.
  std::vector<std::string> receive(double now) {
    std::vector<Pending> due;
    std::vector<Pending> keep;
    for (auto& p : pending_) (p.at <= now ? due : keep).push_back(std::move(p));
    pending_ = std::move(keep);
    std::sort(due.begin(), due.end(), [](const Pending& a, const Pending& b) {
      return a.at != b.at ? a.at < b.at : a.order < b.order;
    });
    std::vector<std::string> out;
    for (auto& p : due) out.push_back(std::move(p.payload));
    return out;
  }

  std::uint64_t sent() const { return sent_; }
  std::uint64_t dropped() const { return dropped_; }

 private:
  struct Pending {
    double at;
    std::uint64_t order;
    std::string payload;
  };
  Impairment imp_;
  Rng rng_;
  std::vector<Pending> pending_;
  std::uint64_t order_{0}, sent_{0}, dropped_{0};
};

/// The three flows between operator station and vehicle.
struct LinkChannels {
  ReliableStream control;   // operator -> vehicle
  DatagramFlow state;       // vehicle -> operator
  DatagramFlow clock_up;    // probe requests, operator -> vehicle
  DatagramFlow clock_down;  // probe replies, vehicle -> operator
};

inline LinkChannels link_channels(const LinkConfig& cfg) {
  return LinkChannels{ReliableStream(cfg.control, cfg.seed * 4 + 1), DatagramFlow(cfg.state, cfg.seed * 4 + 2),
                      DatagramFlow(cfg.clock, cfg.seed * 4 + 3), DatagramFlow(cfg.clock, cfg.seed * 4 + 4)};
}

}  // namespace teledrive::link
