#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "aggrate/meter/meter.hpp"
#include "aggrate/sim/simulator.hpp"

namespace aggrate::testing {

struct BookkeepingCheck {
  std::uint64_t truth = 0;     // packets carried by fresh frames
  std::uint64_t inferred = 0;  // meter's charge over fresh-looking frames
  std::uint64_t unattributed = 0;
};

/// Client-side view of one station's deliveries, in receive order.
inline std::vector<meter::RxPacket> received(const sim::Trace& t, int station) {
  std::vector<const sim::FrameRecord*> by_id;
  for (const auto& f : t.frames) {
    if (f.frame_id >= by_id.size()) by_id.resize(f.frame_id + 1, nullptr);
    by_id[f.frame_id] = &f;
  }
  std::vector<meter::RxPacket> rx;
  for (const auto& p : t.packets) {
    if (p.station != station || !p.t_mac_rx_us) continue;
    const auto* f = by_id.at(*p.frame_id);
    rx.push_back(meter::RxPacket{p.seq, *p.t_mac_rx_us, *p.t_mac_rx_us, f->mcs_rate});
  }
  std::stable_sort(rx.begin(), rx.end(), [](const auto& a, const auto& b) {
    return a.mac_us != b.mac_us ? a.mac_us < b.mac_us : a.seq < b.seq;
  });
  return rx;
}

inline BookkeepingCheck check_bookkeeping(const sim::Trace& t, int station, int n_max) {
  BookkeepingCheck c;
  for (const auto& f : t.frames) {
    if (f.station == station && !f.is_retx) c.truth += static_cast<std::uint64_t>(f.n_agg);
  }
  std::uint64_t last_seq = 0;
  for (const auto& p : t.packets) {
    if (p.station == station && p.frame_id) last_seq = std::max(last_seq, p.seq);
  }
  const auto rx = received(t, station);
  auto frames = meter::reconcile_seq(meter::cluster_by_mac_timestamp(rx), n_max, last_seq);
  for (const auto& f : frames) {
    if (!f.is_retx_inferred) c.inferred += static_cast<std::uint64_t>(f.inferred_tx_count);
    c.unattributed += static_cast<std::uint64_t>(f.unattributed);
  }
  return c;
}

}  // namespace aggrate::testing
