#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "aggrate/common/rng.hpp"
#include "aggrate/common/time.hpp"
#include "aggrate/sim/backhaul.hpp"
#include "aggrate/sim/config.hpp"
#include "aggrate/sim/mac.hpp"
#include "aggrate/sim/pacer.hpp"
#include "aggrate/sim/records.hpp"
#include "aggrate/sim/stats.hpp"

namespace aggrate::sim {

struct TraceOptions {
  bool packets = true;
  bool frames = true;
};

struct SimStats {
  std::vector<StationStats> stations;
  std::uint64_t cross_sent = 0;
  std::uint64_t cross_dropped = 0;
  std::uint64_t collisions = 0;
  std::uint64_t control_frames = 0;
  double busy_time = 0.0;
};

/// Discrete-event model of paced senders, an optional backhaul FIFO, one AP
/// per BSS with per-station queues, and a single shared channel.
class Simulator {
 public:
  using FrameObserver = std::function<void(const FrameRecord&, std::span<const Delivery>)>;
  using Callback = std::function<void(Simulator&)>;

  Simulator(SimConfig config, std::uint64_t seed, TraceOptions options = {});
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Called at the end of every AP data frame with the packets it delivered
  /// (possibly none), in sequence order.
  void set_frame_observer(FrameObserver observer) { observer_ = std::move(observer); }

  /// Runs `fn` at absolute time `at` (ns). Timers at equal times fire in
  /// scheduling order.
  void schedule(SimTime at, Callback fn);

  void set_send_rate(int station, double rate);
  double send_rate(int station) const;
  double mcs_rate(int station) const;

  /// Queues a low-rate control frame that contends for the channel.
  void inject_control_frame(double airtime);

  void run_until(double seconds);

  /// Delay histograms ignore deliveries before `seconds`.
  void set_delay_histogram_start(double seconds);

  SimTime now() const { return now_; }
  const SimConfig& config() const { return config_; }
  const SimStats& stats() const { return stats_; }
  const Trace& trace() const { return trace_; }
  Trace& trace() { return trace_; }
  Trace take_trace() { return std::move(trace_); }

  /// Highest sequence number assigned so far to the station's flow.
  std::uint64_t last_seq(int station) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SimConfig config_;
  SimTime now_ = 0;
  SimStats stats_;
  Trace trace_;
  FrameObserver observer_;
  friend struct Impl;
};

/// Validates, simulates for `duration` seconds and returns the trace.
Trace run_scenario(const SimConfig& config, double duration, std::uint64_t seed,
                   TraceOptions options = {});

}  // namespace aggrate::sim
