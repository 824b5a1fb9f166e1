#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "aggrate/common/rng.hpp"
#include "aggrate/common/time.hpp"
#include "aggrate/sim/config.hpp"

namespace aggrate::sim {

/// overhead + n_agg * L / mcs_rate, all in seconds.
double frame_airtime(int n_agg, double packet_bits, double mcs_rate, double overhead);

struct AccessParams {
  double difs = 34e-6;
  double slot_time = 9e-6;
  int cw_min = 16;
  int cw_max = 1024;
};

AccessParams access_params(const ApConfig& ap);

/// Idle time (DIFS plus backoff slots) a tagged transmitter spends before it
/// wins the channel against `contenders - 1` saturated peers. Every peer
/// transmission that interrupts the countdown costs another DIFS; a tie with
/// a peer is a collision, after which the window doubles (up to cw_max) and
/// the countdown restarts.
double channel_access_interval(int contenders, const AccessParams& params, Rng& rng);

struct GoodputQuery {
  int n_eps = 32;
  double mcs_rate_per_stream = 390e6;
  int nss = 1;
  double feedback_pps = 10.0;
  double beacons_pps = 10.0;
  int receivers = 1;
};

/// Collision-free upper bound on application goodput (bits/s) when every
/// frame carries n_eps packets, net of beacon and feedback airtime.
double theoretical_goodput(const GoodputQuery& query, const ApConfig& ap = {},
                           double packet_len = 12000);

struct QueuedPacket {
  std::uint64_t seq = 0;
  SimTime t_send = 0;
  SimTime t_arrival = 0;
  std::uint32_t attempts = 0;
  std::int64_t record = -1;  // index into the trace packet table, or -1
};

/// Per-destination AP queue: fresh packets plus link-layer retransmissions
/// waiting for a dedicated retx frame.
struct StationQueue {
  std::deque<QueuedPacket> fresh;
  std::deque<QueuedPacket> retx;

  bool empty() const { return fresh.empty() && retx.empty(); }
  std::size_t backlog() const { return fresh.size() + retx.size(); }
};

struct AssembledFrame {
  std::vector<QueuedPacket> packets;
  bool is_retx = false;
};

/// Dequeues one aggregate: a dedicated retx frame when retransmissions are
/// pending, otherwise min(backlog, n_max) fresh packets in FIFO order.
AssembledFrame assemble_frame(StationQueue& queue, int n_max);

struct LossOutcome {
  std::vector<QueuedPacket> delivered;
  std::vector<QueuedPacket> dropped;  // retry limit exceeded
  int lost = 0;                       // loss events in this transmission
};

/// Applies independent per-packet loss (or whole-frame loss when `collided`).
/// Lost packets that still have retries left go back to the head of the retx
/// queue in sequence order.
LossOutcome apply_loss_and_retx(AssembledFrame frame, double error_prob, int retry_limit, Rng& rng,
                                StationQueue& queue, bool collided = false);

}  // namespace aggrate::sim
