#include "aggrate/sim/backhaul.hpp"

#include <algorithm>
#include <cmath>

namespace aggrate::sim {

BackhaulLink::BackhaulLink(const BackhaulConfig& config) : config_(config) {}

int BackhaulLink::occupancy(SimTime now) {
  while (!departures_.empty() && departures_.front() <= now) departures_.pop_front();
  return static_cast<int>(departures_.size());
}

std::optional<SimTime> BackhaulLink::transit(SimTime now, double packet_bits) {
  if (occupancy(now) >= config_.queue_len) {
    ++drops_;
    return std::nullopt;
  }
  const double service = (packet_bits + config_.frame_overhead_bits) / config_.link_rate;
  last_departure_ = std::max(now, last_departure_) + from_seconds(service);
  departures_.push_back(last_departure_);
  ++accepted_;
  return last_departure_;
}

double available_backhaul_capacity(const BackhaulConfig& config, double packet_bits,
                                   double cross_rate) {
  const double efficiency = packet_bits / (packet_bits + config.frame_overhead_bits);
  return std::max(0.0, config.link_rate * efficiency - cross_rate);
}

}  // namespace aggrate::sim
