#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aggrate/common/time.hpp"

namespace aggrate::sim {

enum class DropReason : std::uint8_t { None, Backhaul, ApQueue, RetryExhausted };

struct PacketRecord {
  std::uint64_t seq = 0;
  int station = 0;
  SimTime t_send = 0;
  SimTime t_ap_arrival = kNever;
  std::optional<std::uint64_t> frame_id;
  std::optional<std::int64_t> t_mac_rx_us;
  std::optional<std::int64_t> t_kernel_rx_us;
  int lost_in_frame = 0;  // link-layer loss events
  bool dropped = false;
  DropReason drop_reason = DropReason::None;
};

struct FrameRecord {
  std::uint64_t frame_id = 0;
  int station = 0;
  int n_agg = 0;
  double mcs_rate = 0.0;
  SimTime t_start = 0;
  SimTime t_end = 0;
  bool is_retx = false;
  bool collided = false;
  int n_lost = 0;
};

/// Packet as seen by the receiver when its frame completes.
struct Delivery {
  std::uint64_t seq = 0;
  SimTime t_send = 0;
  SimTime t_ap_arrival = 0;
};

struct ControllerLogRow {
  std::uint32_t slot = 0;
  int station = 0;
  std::optional<double> mean_agg;
  double mean_mcs = 0.0;
  double x_before = 0.0;
  double x_after = 0.0;
  int i_star = -1;
};

struct Trace {
  std::vector<PacketRecord> packets;
  std::vector<FrameRecord> frames;
  std::vector<ControllerLogRow> controller_log;
  std::string scenario;
  std::uint64_t seed = 0;
  double duration = 0.0;
};

}  // namespace aggrate::sim
