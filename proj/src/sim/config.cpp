#include "aggrate/sim/config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aggrate/common/error.hpp"

namespace aggrate::sim {

double schedule_value(double initial, const std::vector<ScheduleStep>& steps, double t) {
  double value = initial;
  for (const auto& s : steps) {
    if (s.at > t) break;
    value = s.value;
  }
  return value;
}

namespace {

void check(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

void check_schedule(const std::vector<ScheduleStep>& steps, double duration,
                    const std::string& field, bool strictly_positive) {
  double prev = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const std::string f = field + "[" + std::to_string(i) + "]";
    check(std::isfinite(s.at) && s.at >= 0.0 && s.at <= duration, f,
          "step time outside [0, duration]");
    check(s.at >= prev, f, "steps must be sorted by time");
    check(std::isfinite(s.value) && (strictly_positive ? s.value > 0.0 : s.value >= 0.0), f,
          strictly_positive ? "value must be positive" : "value must be non-negative");
    prev = s.at;
  }
}

}  // namespace

void validate(const SimConfig& config, double duration) {
  check(std::isfinite(duration) && duration > 0.0, "duration", "must be positive");
  const auto& ap = config.ap;
  check(ap.n_max == 64 || ap.n_max == 128, "ap.n_max", "must be 64 or 128");
  check(ap.queue_capacity > ap.n_max, "ap.queue_capacity", "must exceed n_max");
  check(ap.phy_overhead >= 0.0, "ap.phy_overhead", "must be non-negative");
  check(ap.mpdu_overhead_bits >= 0.0, "ap.mpdu_overhead_bits", "must be non-negative");
  check(ap.difs > 0.0, "ap.difs", "must be positive");
  check(ap.sifs >= 0.0, "ap.sifs", "must be non-negative");
  check(ap.slot_time > 0.0, "ap.slot_time", "must be positive");
  check(ap.cw_min >= 1, "ap.cw_min", "must be >= 1");
  check(ap.cw_max >= ap.cw_min, "ap.cw_max", "must be >= cw_min");
  check(ap.per_packet_error_prob >= 0.0 && ap.per_packet_error_prob <= 1.0,
        "ap.per_packet_error_prob", "must lie in [0, 1]");
  check(ap.retry_limit >= 0, "ap.retry_limit", "must be >= 0");
  check(ap.beacon_pps >= 0.0, "ap.beacon_pps", "must be non-negative");
  check(ap.beacon_airtime > 0.0, "ap.beacon_airtime", "must be positive");
  check(ap.feedback_airtime > 0.0, "ap.feedback_airtime", "must be positive");

  for (std::size_t i = 0; i < config.stations.size(); ++i) {
    const auto& s = config.stations[i];
    const std::string p = "station[" + std::to_string(i) + "].";
    check(s.bss >= 0, p + "bss", "must be >= 0");
    check(std::isfinite(s.mcs_rate) && s.mcs_rate > 0.0, p + "mcs_rate", "must be positive");
    check(std::isfinite(s.packet_len) && s.packet_len > ap.l3_header_bits, p + "packet_len",
          "must exceed the L3 header size");
    check(std::isfinite(s.send_rate) && s.send_rate >= 0.0, p + "send_rate",
          "must be non-negative");
    check_schedule(s.mcs_schedule, duration, p + "mcs_schedule", true);
    check_schedule(s.rate_schedule, duration, p + "rate_schedule", false);
  }

  const auto& bh = config.backhaul;
  check(bh.link_rate > 0.0, "backhaul.link_rate", "must be positive");
  check(bh.queue_len > 0, "backhaul.queue_len", "must be positive");
  check(bh.frame_overhead_bits >= 0.0, "backhaul.frame_overhead_bits", "must be non-negative");
  check(bh.cross_rate >= 0.0, "backhaul.cross_rate", "must be non-negative");
  check(bh.cross_packet_len > 0.0, "backhaul.cross_packet_len", "must be positive");
  check_schedule(bh.cross_schedule, duration, "backhaul.cross_schedule", false);
  check(bh.enabled || (bh.cross_rate == 0.0 && bh.cross_schedule.empty()), "backhaul.cross_rate",
        "cross traffic requires an enabled backhaul");

  for (std::size_t i = 0; i < config.contenders.size(); ++i) {
    const auto& c = config.contenders[i];
    const std::string p = "contender[" + std::to_string(i) + "].";
    check(c.frame_airtime > 0.0, p + "frame_airtime", "must be positive");
    check(c.mean_on >= 0.0 && c.mean_off >= 0.0, p + "mean_on", "must be non-negative");
    check((c.mean_on == 0.0) == (c.mean_off == 0.0), p + "mean_off",
          "mean_on and mean_off must both be zero or both positive");
  }
}

int bss_count(const SimConfig& config) {
  int n = 0;
  for (const auto& s : config.stations) n = std::max(n, s.bss + 1);
  return std::max(n, 1);
}

}  // namespace aggrate::sim
