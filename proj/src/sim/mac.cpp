#include "aggrate/sim/mac.hpp"

#include <algorithm>
#include <stdexcept>

namespace aggrate::sim {

double frame_airtime(int n_agg, double packet_bits, double mcs_rate, double overhead) {
  if (n_agg <= 0 || packet_bits <= 0 || mcs_rate <= 0 || overhead < 0) {
    throw std::invalid_argument("frame_airtime: arguments must be positive");
  }
  return overhead + static_cast<double>(n_agg) * packet_bits / mcs_rate;
}

AccessParams access_params(const ApConfig& ap) {
  return AccessParams{ap.difs, ap.slot_time, ap.cw_min, ap.cw_max};
}

double channel_access_interval(int contenders, const AccessParams& params, Rng& rng) {
  if (contenders < 1) throw std::invalid_argument("channel_access_interval: contenders < 1");
  double idle = 0.0;
  int cw = params.cw_min;
  std::vector<std::uint64_t> peers(static_cast<std::size_t>(contenders - 1));
  for (;;) {
    const auto own = rng.below(static_cast<std::uint64_t>(cw));
    for (auto& p : peers) p = rng.below(static_cast<std::uint64_t>(params.cw_min));
    // Peers that expire strictly earlier transmit first; each restarts its
    // countdown afterwards but is assumed to draw past our remaining count.
    int interruptions = 0;
    bool collision = false;
    for (auto p : peers) {
      if (p < own) ++interruptions;
      if (p == own) collision = true;
    }
    idle += params.difs * (1 + interruptions) + static_cast<double>(own) * params.slot_time;
    if (!collision) return idle;
    cw = std::min(cw * 2, params.cw_max);
  }
}

double theoretical_goodput(const GoodputQuery& q, const ApConfig& ap, double packet_len) {
  if (q.n_eps < 1) throw std::invalid_argument("theoretical_goodput: n_eps < 1");
  const double mean_access = ap.difs + 0.5 * (ap.cw_min - 1) * ap.slot_time;
  const double rate = q.mcs_rate_per_stream * q.nss;
  const double frame =
      frame_airtime(q.n_eps, packet_len + ap.mpdu_overhead_bits, rate, ap.phy_overhead) +
      mean_access;
  const double payload_rate = q.n_eps * (packet_len - ap.l3_header_bits) / frame;
  const double control_busy = q.beacons_pps * (ap.beacon_airtime + mean_access) +
                              q.receivers * q.feedback_pps * (ap.feedback_airtime + mean_access);
  return payload_rate * std::max(0.0, 1.0 - control_busy);
}

AssembledFrame assemble_frame(StationQueue& queue, int n_max) {
  AssembledFrame frame;
  auto& source = queue.retx.empty() ? queue.fresh : queue.retx;
  frame.is_retx = !queue.retx.empty();
  const auto n = std::min<std::size_t>(source.size(), static_cast<std::size_t>(n_max));
  frame.packets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    frame.packets.push_back(source.front());
    source.pop_front();
  }
  return frame;
}

LossOutcome apply_loss_and_retx(AssembledFrame frame, double error_prob, int retry_limit, Rng& rng,
                                StationQueue& queue, bool collided) {
  LossOutcome out;
  std::vector<QueuedPacket> requeue;
  for (auto& p : frame.packets) {
    ++p.attempts;
    const bool lost = collided || (error_prob > 0.0 && rng.bernoulli(error_prob));
    if (!lost) {
      out.delivered.push_back(p);
      continue;
    }
    ++out.lost;
    if (static_cast<int>(p.attempts) > retry_limit) {
      out.dropped.push_back(p);
    } else {
      requeue.push_back(p);
    }
  }
  // Head of the retx queue, preserving sequence order.
  for (auto it = requeue.rbegin(); it != requeue.rend(); ++it) queue.retx.push_front(*it);
  return out;
}

}  // namespace aggrate::sim
