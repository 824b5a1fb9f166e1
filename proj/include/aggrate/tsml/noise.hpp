#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aggrate/common/rng.hpp"
#include "aggrate/sim/records.hpp"

namespace aggrate::tsml {

/// Host receive-path model turning MAC frame completions into kernel
/// timestamps. Packets are handled one at a time at per_packet_us (+ jitter).
/// A host that is idle when a frame lands wakes after a latency; a busy host
/// keeps draining. The regime is picked per frame from a smoothed packet rate:
///  - interrupt: each wake-up drains the ring in one go;
///  - polled: a poll handles at most poll_budget packets, then yields for a
///    random gap, so large gaps appear inside frames and a backlog hides
///    frame boundaries;
///  - mixed: polled with probability rising linearly between the two rates.
struct KernelNoiseParams {
  double per_packet_us = 5.0;
  double jitter_us = 0.5;           // mean of the exponential per-packet jitter
  double irq_latency_us = 15.0;     // interrupt wake-up: fixed part
  double irq_jitter_us = 10.0;      // interrupt wake-up: exponential mean
  double poll_wake_us = 20.0;       // polled wake-up: fixed part
  double poll_wake_jitter_us = 30.0;
  double interrupt_max_pps = 15000; // below: interrupt mode only
  double polling_min_pps = 25000;   // above: polled mode only
  int poll_budget = 12;
  double poll_gap_min_us = 20.0;    // yield gap after an exhausted budget
  double poll_gap_mean_us = 70.0;
  double load_window_s = 0.01;      // time constant of the rate estimate
};

void validate(const KernelNoiseParams& p);

struct KernelPacket {
  double t_us = 0.0;  // kernel timestamp
  std::int64_t frame = 0;  // index into the input frame list
  double mac_us = 0.0;
  bool first = false;  // first packet of its frame
};

/// One kernel packet per delivered packet (n_agg − n_lost) of each frame, in
/// receive order. Timestamps are non-decreasing.
std::vector<KernelPacket> kernel_noise(std::span<const sim::FrameRecord> frames, const KernelNoiseParams& params,
                                       Rng& rng);

}  // namespace aggrate::tsml
