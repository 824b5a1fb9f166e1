#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "aggrate/common/rng.hpp"
#include "aggrate/common/time.hpp"
#include "aggrate/sim/config.hpp"

namespace aggrate::sim {

/// Constant-bit-rate packet source. Send times are accumulated in double
/// precision nanoseconds so that the long-run rate is exact.
class Pacer {
 public:
  Pacer() = default;
  Pacer(double packet_bits, double rate, SimTime start);

  /// Time of the next send, kNever when the source is idle.
  SimTime next() const;

  /// Consumes the pending send and schedules the following one.
  void advance();

  /// A rate change keeps the already pending send; only the intervals after
  /// it use the new rate. Rate 0 stops the source.
  void set_rate(double rate, SimTime now);

  double rate() const { return rate_; }
  double packet_bits() const { return bits_; }

  /// Switches to exponential inter-send times drawn from `rng` (a Poisson
  /// source at the same mean rate). The pending send is redrawn.
  void make_poisson(Rng rng, SimTime now);

 private:
  double gap_ns();

  std::optional<Rng> poisson_;
  double bits_ = 12000;
  double rate_ = 0.0;
  double next_ns_ = std::numeric_limits<double>::infinity();
};

/// Send times (ns) of a paced flow over [start, end) with scheduled rate
/// changes applied at their step times.
std::vector<SimTime> enqueue_paced(double rate, double packet_bits, double start, double end,
                                   const std::vector<ScheduleStep>& changes = {});

}  // namespace aggrate::sim
