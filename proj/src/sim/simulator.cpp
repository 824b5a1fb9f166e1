#include "aggrate/sim/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace aggrate::sim {

namespace {

enum class EntityKind { Ap, Control, Contender };

struct Entity {
  EntityKind kind = EntityKind::Ap;
  int index = 0;
  bool active = false;
  bool has_backoff = false;
  int backoff = 0;
  int cw = 16;
  std::int64_t start_slot = 0;
};

struct InFlight {
  SimTime arrival = 0;
  int station = 0;
  QueuedPacket packet;
};

struct Transmission {
  int entity = 0;
  double airtime = 0.0;
  int station = -1;
  AssembledFrame frame;
  FrameRecord record;
};

struct TimerEvent {
  SimTime at = 0;
  std::uint64_t order = 0;
  Simulator::Callback fn;
  bool operator>(const TimerEvent& o) const {
    return at != o.at ? at > o.at : order > o.order;
  }
};

struct ContenderState {
  bool on = true;
  SimTime next_toggle = kNever;
};

// Stream tags for Rng::stream.
constexpr std::uint64_t kBackoffStream = 1;
constexpr std::uint64_t kLossStream = 2;
constexpr std::uint64_t kContenderStream = 3;
constexpr std::uint64_t kCrossStream = 4;

}  // namespace

struct Simulator::Impl {
  Simulator& sim;
  const SimConfig& cfg;
  TraceOptions options;
  Rng backoff_rng;
  Rng loss_rng;
  Rng contender_rng;

  std::vector<Pacer> pacers;
  Pacer cross;
  std::optional<BackhaulLink> link;
  std::deque<InFlight> inflight;
  std::vector<StationQueue> queues;
  std::vector<std::uint64_t> last_seq;
  std::vector<std::vector<int>> bss_stations;
  std::vector<std::size_t> rr;

  std::vector<Entity> entities;  // APs, then the control entity, then contenders
  int control_entity = 0;
  std::deque<double> control_queue;
  std::vector<ContenderState> contenders;

  std::priority_queue<TimerEvent, std::vector<TimerEvent>, std::greater<>> timers;
  std::uint64_t timer_order = 0;

  bool busy = false;
  SimTime busy_end = 0;
  SimTime grid_origin = 0;
  bool collided = false;
  std::vector<Transmission> on_air;
  std::uint64_t next_frame_id = 0;
  SimTime difs_ns = 0;
  SimTime slot_ns = 0;
  std::vector<Delivery> scratch;

  Impl(Simulator& s, std::uint64_t seed, TraceOptions opts)
      : sim(s),
        cfg(s.config_),
        options(opts),
        backoff_rng(Rng::stream(seed, kBackoffStream)),
        loss_rng(Rng::stream(seed, kLossStream)),
        contender_rng(Rng::stream(seed, kContenderStream)) {
    const auto n = cfg.stations.size();
    const int nbss = bss_count(cfg);
    difs_ns = from_seconds(cfg.ap.difs);
    slot_ns = std::max<SimTime>(1, from_seconds(cfg.ap.slot_time));
    grid_origin = difs_ns;

    queues.resize(n);
    last_seq.assign(n, 0);
    bss_stations.resize(static_cast<std::size_t>(nbss));
    rr.assign(static_cast<std::size_t>(nbss), 0);
    sim.stats_.stations.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& st = cfg.stations[i];
      bss_stations[static_cast<std::size_t>(st.bss)].push_back(static_cast<int>(i));
      const double rate = st.mode == StationMode::Controlled ? st.send_rate : 0.0;
      pacers.emplace_back(st.packet_len, rate, 0);
    }
    if (cfg.backhaul.enabled) {
      link.emplace(cfg.backhaul);
      cross = Pacer(cfg.backhaul.cross_packet_len, cfg.backhaul.cross_rate, 0);
      if (cfg.backhaul.cross_poisson) cross.make_poisson(Rng::stream(seed, kCrossStream), 0);
    }

    for (int b = 0; b < nbss; ++b) entities.push_back(Entity{EntityKind::Ap, b});
    control_entity = static_cast<int>(entities.size());
    entities.push_back(Entity{EntityKind::Control, 0});
    for (std::size_t c = 0; c < cfg.contenders.size(); ++c) {
      entities.push_back(Entity{EntityKind::Contender, static_cast<int>(c)});
      ContenderState cs;
      const auto& cc = cfg.contenders[c];
      if (cc.mean_on > 0.0) {
        cs.on = contender_rng.bernoulli(cc.mean_on / (cc.mean_on + cc.mean_off));
        cs.next_toggle =
            from_seconds(contender_rng.exponential(cs.on ? cc.mean_on : cc.mean_off));
      }
      contenders.push_back(cs);
    }
    for (auto& e : entities) e.cw = cfg.ap.cw_min;
  }

  void start() {
    for (std::size_t i = 0; i < cfg.stations.size(); ++i) {
      const int s = static_cast<int>(i);
      for (const auto& step : cfg.stations[i].rate_schedule) {
        const double v = step.value;
        sim.schedule(from_seconds(step.at), [s, v](Simulator& x) { x.set_send_rate(s, v); });
      }
    }
    for (const auto& step : cfg.backhaul.cross_schedule) {
      const double v = step.value;
      sim.schedule(from_seconds(step.at), [this, v](Simulator&) { cross.set_rate(v, sim.now_); });
    }
    if (cfg.ap.beacon_pps > 0.0) {
      const int nbss = static_cast<int>(bss_stations.size());
      const double interval = 1.0 / cfg.ap.beacon_pps;
      for (int b = 0; b < nbss; ++b) {
        schedule_beacon(from_seconds(interval * (0.5 + 0.1 * b / nbss)));
      }
    }
    for (std::size_t c = 0; c < contenders.size(); ++c) {
      if (contenders[c].on) activate(entities[static_cast<std::size_t>(control_entity) + 1 + c]);
    }
    for (std::size_t b = 0; b < bss_stations.size(); ++b) {
      if (ap_backlogged(static_cast<int>(b))) activate(entities[b]);
    }
  }

  void schedule_beacon(SimTime at) {
    sim.schedule(at, [this](Simulator& s) {
      s.inject_control_frame(cfg.ap.beacon_airtime);
      schedule_beacon(s.now_ + from_seconds(1.0 / cfg.ap.beacon_pps));
    });
  }

  bool ap_backlogged(int bss) const {
    for (int s : bss_stations[static_cast<std::size_t>(bss)]) {
      if (cfg.stations[static_cast<std::size_t>(s)].mode == StationMode::LegacySaturated) return true;
      if (!queues[static_cast<std::size_t>(s)].empty()) return true;
    }
    return false;
  }

  void activate(Entity& e) {
    if (e.active) return;
    e.active = true;
    if (!e.has_backoff) {
      e.backoff = static_cast<int>(backoff_rng.below(static_cast<std::uint64_t>(e.cw)));
      e.has_backoff = true;
    }
    if (busy) {
      e.start_slot = 0;
    } else {
      const SimTime d = sim.now_ - grid_origin;
      e.start_slot = d <= 0 ? 0 : (d + slot_ns - 1) / slot_ns;
    }
  }

  SimTime expiry(const Entity& e) const {
    return grid_origin + (e.start_slot + e.backoff) * slot_ns;
  }

  SimTime grant_time() const {
    SimTime best = kNever;
    for (const auto& e : entities) {
      if (e.active) best = std::min(best, expiry(e));
    }
    return best;
  }

  std::pair<SimTime, int> next_source() const {
    SimTime best = kNever;
    int who = -2;
    for (std::size_t i = 0; i < pacers.size(); ++i) {
      const SimTime t = pacers[i].next();
      if (t < best) {
        best = t;
        who = static_cast<int>(i);
      }
    }
    if (link && cross.next() < best) {
      best = cross.next();
      who = -1;
    }
    return {best, who};
  }

  std::pair<SimTime, int> next_toggle() const {
    SimTime best = kNever;
    int who = -1;
    for (std::size_t c = 0; c < contenders.size(); ++c) {
      if (contenders[c].next_toggle < best) {
        best = contenders[c].next_toggle;
        who = static_cast<int>(c);
      }
    }
    return {best, who};
  }

  QueuedPacket new_packet(int s) {
    auto& st = sim.stats_.stations[static_cast<std::size_t>(s)];
    ++st.at(to_seconds(sim.now_)).sent;
    QueuedPacket p;
    p.seq = ++last_seq[static_cast<std::size_t>(s)];
    p.t_send = sim.now_;
    p.t_arrival = sim.now_;
    if (options.packets) {
      PacketRecord r;
      r.seq = p.seq;
      r.station = s;
      r.t_send = sim.now_;
      p.record = static_cast<std::int64_t>(sim.trace_.packets.size());
      sim.trace_.packets.push_back(r);
    }
    return p;
  }

  void mark_drop(int s, const QueuedPacket& p, DropReason reason) {
    auto& b = sim.stats_.stations[static_cast<std::size_t>(s)].at(to_seconds(sim.now_));
    switch (reason) {
      case DropReason::Backhaul: ++b.drop_backhaul; break;
      case DropReason::ApQueue: ++b.drop_ap; break;
      case DropReason::RetryExhausted: ++b.drop_retry; break;
      case DropReason::None: break;
    }
    if (p.record >= 0) {
      auto& r = sim.trace_.packets[static_cast<std::size_t>(p.record)];
      r.dropped = true;
      r.drop_reason = reason;
    }
  }

  void send(int src) {
    if (src == -1) {
      cross.advance();
      ++sim.stats_.cross_sent;
      if (!link->transit(sim.now_, cfg.backhaul.cross_packet_len)) ++sim.stats_.cross_dropped;
      return;
    }
    pacers[static_cast<std::size_t>(src)].advance();
    auto p = new_packet(src);
    if (!link) {
      arrive_packet(src, p);
      return;
    }
    const auto dep = link->transit(sim.now_, cfg.stations[static_cast<std::size_t>(src)].packet_len);
    if (!dep) {
      mark_drop(src, p, DropReason::Backhaul);
      return;
    }
    inflight.push_back(InFlight{*dep, src, p});
  }

  void arrive_packet(int s, QueuedPacket p) {
    p.t_arrival = sim.now_;
    if (p.record >= 0) sim.trace_.packets[static_cast<std::size_t>(p.record)].t_ap_arrival = sim.now_;
    auto& q = queues[static_cast<std::size_t>(s)];
    if (q.backlog() >= static_cast<std::size_t>(cfg.ap.queue_capacity)) {
      mark_drop(s, p, DropReason::ApQueue);
      return;
    }
    q.fresh.push_back(p);
    activate(entities[static_cast<std::size_t>(cfg.stations[static_cast<std::size_t>(s)].bss)]);
  }

  void toggle(int c) {
    auto& cs = contenders[static_cast<std::size_t>(c)];
    const auto& cc = cfg.contenders[static_cast<std::size_t>(c)];
    auto& e = entities[static_cast<std::size_t>(control_entity) + 1 + static_cast<std::size_t>(c)];
    cs.on = !cs.on;
    cs.next_toggle = sim.now_ + from_seconds(contender_rng.exponential(cs.on ? cc.mean_on : cc.mean_off));
    if (cs.on) {
      activate(e);
    } else if (e.active) {
      e.active = false;
      e.has_backoff = false;
    }
  }

  int pick_station(int bss) {
    const auto& list = bss_stations[static_cast<std::size_t>(bss)];
    auto& pos = rr[static_cast<std::size_t>(bss)];
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::size_t i = (pos + k) % list.size();
      const int s = list[i];
      const bool legacy = cfg.stations[static_cast<std::size_t>(s)].mode == StationMode::LegacySaturated;
      if (legacy || !queues[static_cast<std::size_t>(s)].empty()) {
        pos = (i + 1) % list.size();
        return s;
      }
    }
    return -1;
  }

  Transmission build_ap_frame(int entity, int bss) {
    Transmission tx;
    tx.entity = entity;
    const int s = pick_station(bss);
    tx.station = s;
    const auto& st = cfg.stations[static_cast<std::size_t>(s)];
    auto& q = queues[static_cast<std::size_t>(s)];
    if (st.mode == StationMode::LegacySaturated) {
      while (q.backlog() < static_cast<std::size_t>(cfg.ap.queue_capacity)) q.fresh.push_back(new_packet(s));
    }
    tx.frame = assemble_frame(q, cfg.ap.n_max);
    const double mcs = schedule_value(st.mcs_rate, st.mcs_schedule, to_seconds(sim.now_));
    const int n = static_cast<int>(tx.frame.packets.size());
    tx.airtime = frame_airtime(n, st.packet_len + cfg.ap.mpdu_overhead_bits, mcs, cfg.ap.phy_overhead);
    auto& r = tx.record;
    r.frame_id = next_frame_id++;
    r.station = s;
    r.n_agg = n;
    r.mcs_rate = mcs;
    r.t_start = sim.now_;
    r.t_end = sim.now_ + from_seconds(tx.airtime);
    r.is_retx = tx.frame.is_retx;
    for (const auto& p : tx.frame.packets) {
      if (p.record >= 0) sim.trace_.packets[static_cast<std::size_t>(p.record)].frame_id = r.frame_id;
    }
    return tx;
  }

  void grant(SimTime t) {
    const std::int64_t s_w = (t - grid_origin) / slot_ns;
    std::vector<int> winners;
    for (std::size_t i = 0; i < entities.size(); ++i) {
      auto& e = entities[i];
      if (!e.active) continue;
      if (expiry(e) == t) {
        winners.push_back(static_cast<int>(i));
      } else {
        const auto elapsed = s_w - e.start_slot;
        if (elapsed > 0) e.backoff -= static_cast<int>(elapsed);
      }
    }
    collided = winners.size() > 1;
    on_air.clear();
    double longest = 0.0;
    for (int w : winners) {
      auto& e = entities[static_cast<std::size_t>(w)];
      Transmission tx;
      switch (e.kind) {
        case EntityKind::Ap:
          tx = build_ap_frame(w, e.index);
          break;
        case EntityKind::Control:
          tx.entity = w;
          tx.airtime = control_queue.front();
          control_queue.pop_front();
          ++sim.stats_.control_frames;
          break;
        case EntityKind::Contender:
          tx.entity = w;
          tx.airtime = cfg.contenders[static_cast<std::size_t>(e.index)].frame_airtime;
          break;
      }
      longest = std::max(longest, tx.airtime);
      e.active = false;
      e.has_backoff = false;
      e.cw = collided ? std::min(e.cw * 2, cfg.ap.cw_max) : cfg.ap.cw_min;
      on_air.push_back(std::move(tx));
    }
    busy = true;
    busy_end = t + from_seconds(longest);
    if (collided) ++sim.stats_.collisions;
    sim.stats_.busy_time += longest;
  }

  void finish_ap(Transmission& tx) {
    const int s = tx.station;
    const auto& st = cfg.stations[static_cast<std::size_t>(s)];
    auto& q = queues[static_cast<std::size_t>(s)];
    auto& rec = tx.record;
    rec.collided = collided;
    const auto sent = tx.frame.packets;
    auto out = apply_loss_and_retx(std::move(tx.frame), cfg.ap.per_packet_error_prob, cfg.ap.retry_limit,
                                   loss_rng, q, collided);
    rec.n_lost = out.lost;

    auto& stats = sim.stats_.stations[static_cast<std::size_t>(s)];
    auto& b = stats.at(to_seconds(rec.t_end));
    ++b.frames;
    if (rec.is_retx) {
      ++b.retx_frames;
    } else {
      b.agg_sum += static_cast<std::uint64_t>(rec.n_agg);
    }
    b.payload_airtime += rec.n_agg * st.packet_len / rec.mcs_rate;

    const auto mac_us = to_micros(rec.t_end);
    const double payload_bits = st.packet_len - cfg.ap.l3_header_bits;
    scratch.clear();
    std::size_t d = 0;
    for (const auto& p : sent) {
      const bool ok = d < out.delivered.size() && out.delivered[d].seq == p.seq;
      if (ok) ++d;
      if (p.record >= 0) {
        auto& r = sim.trace_.packets[static_cast<std::size_t>(p.record)];
        if (ok) {
          r.t_mac_rx_us = mac_us;
        } else {
          ++r.lost_in_frame;
        }
      }
      if (!ok) continue;
      const double delay = to_seconds(rec.t_end - p.t_send);
      ++b.delivered;
      b.delay_sum += delay;
      b.goodput_bits += payload_bits;
      stats.record_delay(to_seconds(rec.t_end), delay);
      scratch.push_back(Delivery{p.seq, p.t_send, p.t_arrival});
    }
    for (const auto& p : out.dropped) mark_drop(s, p, DropReason::RetryExhausted);
    if (options.frames) sim.trace_.frames.push_back(rec);
    if (sim.observer_) sim.observer_(rec, scratch);
  }

  void finish_transmissions() {
    for (auto& tx : on_air) {
      if (entities[static_cast<std::size_t>(tx.entity)].kind == EntityKind::Ap) finish_ap(tx);
    }
    on_air.clear();
    busy = false;
    grid_origin = busy_end + difs_ns;
    for (auto& e : entities) {
      if (e.active) e.start_slot = 0;
    }
    for (std::size_t i = 0; i < entities.size(); ++i) {
      auto& e = entities[i];
      if (e.active) continue;
      bool want = false;
      switch (e.kind) {
        case EntityKind::Ap: want = ap_backlogged(e.index); break;
        case EntityKind::Control: want = !control_queue.empty(); break;
        case EntityKind::Contender: want = contenders[static_cast<std::size_t>(e.index)].on; break;
      }
      if (want) activate(e);
    }
  }

  void fire_timer() {
    TimerEvent ev = timers.top();
    timers.pop();
    ev.fn(sim);
  }
};

Simulator::Simulator(SimConfig config, std::uint64_t seed, TraceOptions options)
    : config_(std::move(config)) {
  trace_.seed = seed;
  impl_ = std::make_unique<Impl>(*this, seed, options);
  impl_->start();
}

Simulator::~Simulator() = default;

void Simulator::schedule(SimTime at, Callback fn) {
  impl_->timers.push(TimerEvent{std::max(at, now_), impl_->timer_order++, std::move(fn)});
}

void Simulator::set_send_rate(int station, double rate) {
  const auto i = static_cast<std::size_t>(station);
  if (config_.stations.at(i).mode != StationMode::Controlled) return;
  impl_->pacers[i].set_rate(rate, now_);
}

double Simulator::send_rate(int station) const {
  return impl_->pacers.at(static_cast<std::size_t>(station)).rate();
}

double Simulator::mcs_rate(int station) const {
  const auto& st = config_.stations.at(static_cast<std::size_t>(station));
  return schedule_value(st.mcs_rate, st.mcs_schedule, to_seconds(now_));
}

void Simulator::inject_control_frame(double airtime) {
  impl_->control_queue.push_back(airtime);
  auto& e = impl_->entities[static_cast<std::size_t>(impl_->control_entity)];
  impl_->activate(e);
}

void Simulator::set_delay_histogram_start(double seconds) {
  for (auto& s : stats_.stations) s.hist_from = seconds;
}

std::uint64_t Simulator::last_seq(int station) const {
  return impl_->last_seq.at(static_cast<std::size_t>(station));
}

void Simulator::run_until(double seconds) {
  const SimTime end = from_seconds(seconds);
  auto& I = *impl_;
  for (;;) {
    const SimTime t_frame = I.busy ? I.busy_end : kNever;
    const SimTime t_timer = I.timers.empty() ? kNever : I.timers.top().at;
    const auto [t_toggle, toggler] = I.next_toggle();
    const auto [t_src, src] = I.next_source();
    const SimTime t_arr = I.inflight.empty() ? kNever : I.inflight.front().arrival;
    const SimTime t_grant = I.busy ? kNever : I.grant_time();
    const SimTime t = std::min({t_frame, t_timer, t_toggle, t_src, t_arr, t_grant});
    if (t == kNever || t > end) break;
    now_ = t;
    if (t == t_frame) {
      I.finish_transmissions();
    } else if (t == t_timer) {
      I.fire_timer();
    } else if (t == t_toggle) {
      I.toggle(toggler);
    } else if (t == t_src) {
      I.send(src);
    } else if (t == t_arr) {
      const InFlight f = I.inflight.front();
      I.inflight.pop_front();
      I.arrive_packet(f.station, f.packet);
    } else {
      I.grant(t);
    }
  }
  now_ = std::max(now_, end);
}

Trace run_scenario(const SimConfig& config, double duration, std::uint64_t seed,
                   TraceOptions options) {
  validate(config, duration);
  Simulator sim(config, seed, options);
  sim.run_until(duration);
  Trace t = sim.take_trace();
  t.seed = seed;
  t.duration = duration;
  return t;
}

}  // namespace aggrate::sim
