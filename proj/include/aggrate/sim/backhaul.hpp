#pragma once

#include <cstdint>
#include <deque>
#include <optional>

#include "aggrate/common/time.hpp"
#include "aggrate/sim/config.hpp"

namespace aggrate::sim {

/// Drop-tail FIFO in front of a serial link of fixed rate. Occupancy counts
/// the packet in service.
class BackhaulLink {
 public:
  explicit BackhaulLink(const BackhaulConfig& config);

  /// Departure time of a packet offered at `now`, or nullopt when the queue
  /// is full. Calls must be made in non-decreasing `now`.
  std::optional<SimTime> transit(SimTime now, double packet_bits);

  int occupancy(SimTime now);
  std::uint64_t drops() const { return drops_; }
  std::uint64_t accepted() const { return accepted_; }

 private:
  BackhaulConfig config_;
  std::deque<SimTime> departures_;
  SimTime last_departure_ = 0;
  std::uint64_t drops_ = 0;
  std::uint64_t accepted_ = 0;
};

/// Long-run capacity (bits/s of IP packets) left to a flow on the link.
double available_backhaul_capacity(const BackhaulConfig& config, double packet_bits,
                                   double cross_rate);

}  // namespace aggrate::sim
