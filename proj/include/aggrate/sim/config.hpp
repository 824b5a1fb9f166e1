#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aggrate::sim {

/// A value that switches to `value` at time `at` (seconds).
struct ScheduleStep {
  double at = 0.0;
  double value = 0.0;
};

/// Looks up a piecewise-constant schedule; steps must be sorted by time.
double schedule_value(double initial, const std::vector<ScheduleStep>& steps, double t);

enum class StationMode { Controlled, LegacySaturated };

struct StationConfig {
  int bss = 0;
  double mcs_rate = 780e6;  // bits/s at the PHY, all spatial streams
  std::vector<ScheduleStep> mcs_schedule;
  double packet_len = 12000;  // IP datagram, bits
  StationMode mode = StationMode::Controlled;
  double send_rate = 0.0;  // initial paced rate, bits/s
  std::vector<ScheduleStep> rate_schedule;
};

struct ApConfig {
  int n_max = 64;
  int queue_capacity = 1000;           // packets per station
  double phy_overhead = 100e-6;        // preamble + SIFS + block ack, seconds
  double mpdu_overhead_bits = 352;     // per-packet framing on air
  double l3_header_bits = 224;         // IP + UDP headers inside packet_len
  double difs = 34e-6;
  double sifs = 16e-6;
  double slot_time = 9e-6;
  int cw_min = 16;
  int cw_max = 1024;
  double per_packet_error_prob = 0.0;
  int retry_limit = 7;
  double beacon_pps = 10.0;
  double beacon_airtime = 420e-6;
  double feedback_airtime = 110e-6;
};

struct BackhaulConfig {
  bool enabled = false;
  double link_rate = 1e9;
  int queue_len = 100;
  double frame_overhead_bits = 304;  // ethernet preamble, header, FCS, IFG
  double cross_rate = 0.0;
  std::vector<ScheduleStep> cross_schedule;
  double cross_packet_len = 12000;
  bool cross_poisson = true;  // exponential inter-arrivals; false paces them
};

/// A non-AP transmitter sharing the channel (uplink station or a neighbour).
/// With mean_on/mean_off both zero it is saturated.
struct ContenderConfig {
  double frame_airtime = 1e-3;
  double mean_on = 0.0;
  double mean_off = 0.0;
};

struct SimConfig {
  ApConfig ap;
  std::vector<StationConfig> stations;
  BackhaulConfig backhaul;
  std::vector<ContenderConfig> contenders;
};

/// Throws ConfigError naming the first invalid field.
void validate(const SimConfig& config, double duration);

/// Number of BSSs (APs) implied by the station list.
int bss_count(const SimConfig& config);

}  // namespace aggrate::sim
