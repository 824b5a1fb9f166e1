#pragma once

#include <cstdint>
#include <vector>

namespace aggrate::sim {

struct StatsBucket {
  std::uint32_t sent = 0;
  std::uint32_t delivered = 0;
  std::uint32_t drop_backhaul = 0;
  std::uint32_t drop_ap = 0;
  std::uint32_t drop_retry = 0;
  std::uint32_t frames = 0;
  std::uint32_t retx_frames = 0;
  std::uint64_t agg_sum = 0;  // fresh frames only
  double delay_sum = 0.0;     // seconds
  double payload_airtime = 0.0;
  double goodput_bits = 0.0;
};

/// Streaming per-station counters kept in fixed-length time buckets so that
/// long runs do not need a packet trace.
struct StationStats {
  double bucket_len = 0.1;
  double hist_from = 0.0;  // delays of deliveries before this time are not binned
  std::vector<StatsBucket> buckets;
  std::vector<std::uint32_t> delay_hist;  // 10 us bins, last bin saturates

  StatsBucket& at(double t);
  void record_delay(double now, double seconds);

  StatsBucket total() const;
  /// Sum over buckets whose start lies in [t0, t1).
  StatsBucket window(double t0, double t1) const;
  /// Delay quantile from the histogram, q in [0, 1].
  double delay_quantile(double q) const;
  double delay_max() const;
};

struct WindowSummary {
  double seconds = 0.0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t drops = 0;
  std::uint64_t drop_ap = 0;
  std::uint64_t drop_backhaul = 0;
  std::uint64_t drop_retry = 0;
  double goodput = 0.0;     // bits/s
  double mean_delay = 0.0;  // seconds
  double mean_agg = 0.0;
  double payload_airtime = 0.0;
  std::uint64_t frames = 0;
};

WindowSummary summarize(const StationStats& stats, double t0, double t1);

}  // namespace aggrate::sim
