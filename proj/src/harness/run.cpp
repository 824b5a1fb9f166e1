#include "aggrate/harness/run.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "aggrate/common/error.hpp"
#include "aggrate/control/controller.hpp"
#include "aggrate/sim/mac.hpp"

namespace aggrate::harness {

double scenario_theory_goodput(const Scenario& s) {
  double best = 0;
  double len = 12000;
  for (const auto& st : s.sim.stations) {
    double mcs = st.mcs_rate;
    for (const auto& step : st.mcs_schedule) mcs = std::max(mcs, step.value);
    if (mcs > best) {
      best = mcs;
      len = st.packet_len;
    }
  }
  sim::GoodputQuery q;
  q.n_eps = s.sim.ap.n_max;
  q.mcs_rate_per_stream = best;
  q.nss = 1;
  q.beacons_pps = s.sim.ap.beacon_pps * sim::bss_count(s.sim);
  q.receivers = static_cast<int>(s.sim.stations.size());
  q.feedback_pps = s.controller.enabled && s.controller.feedback_frames ? 1.0 / s.controller.params.delta : 0.0;
  return sim::theoretical_goodput(q, s.sim.ap, len);
}

namespace {

struct Loop {
  const Scenario& s;
  std::vector<meter::AggMeter> meters;
  std::vector<std::vector<int>> bss_members;  // controlled stations per BSS
  std::vector<std::unique_ptr<control::RateController>> controllers;
  std::vector<std::vector<meter::FeedbackReport>> reports;
  int ref_bss = -1;
  int ref_station = -1;  // global id
  std::vector<std::optional<double>> series;
  std::vector<double> rates;
  std::vector<sim::ControllerLogRow> log;
  std::uint32_t slot = 0;

  explicit Loop(const Scenario& sc) : s(sc) {
    const auto n = s.sim.stations.size();
    for (std::size_t i = 0; i < n; ++i) meters.emplace_back(static_cast<int>(i), s.controller.params.delta, s.sim.ap.n_max);
    reports.resize(n);
    bss_members.resize(static_cast<std::size_t>(sim::bss_count(s.sim)));
    for (std::size_t i = 0; i < n; ++i) {
      if (s.sim.stations[i].mode == sim::StationMode::Controlled)
        bss_members[static_cast<std::size_t>(s.sim.stations[i].bss)].push_back(static_cast<int>(i));
    }
    for (std::size_t b = 0; b < bss_members.size(); ++b) {
      const auto& m = bss_members[b];
      if (m.empty()) {
        controllers.emplace_back();
        continue;
      }
      auto p = s.controller.params;
      p.n = static_cast<int>(m.size());
      controllers.push_back(std::make_unique<control::RateController>(p, p.n));
      if (ref_bss < 0) {
        ref_bss = static_cast<int>(b);
        ref_station = m.front();
        for (int i : m) {
          if (s.sim.stations[static_cast<std::size_t>(i)].mcs_rate >
              s.sim.stations[static_cast<std::size_t>(ref_station)].mcs_rate)
            ref_station = i;
        }
      }
    }
  }

  void on_slot(sim::Simulator& simr) {
    const std::int64_t now_us = to_micros(simr.now());
    std::vector<std::vector<meter::FeedbackReport>> by_bss(bss_members.size());
    for (std::size_t i = 0; i < meters.size(); ++i) {
      for (auto& r : meters[i].poll(now_us)) {
        reports[i].push_back(r);
        const auto& st = s.sim.stations[i];
        if (st.mode != sim::StationMode::Controlled) continue;
        if (s.controller.feedback_frames) simr.inject_control_frame(s.sim.ap.feedback_airtime);
        const auto& members = bss_members[static_cast<std::size_t>(st.bss)];
        const auto local = std::find(members.begin(), members.end(), static_cast<int>(i)) - members.begin();
        r.station = static_cast<std::uint16_t>(local);
        by_bss[static_cast<std::size_t>(st.bss)].push_back(r);
      }
    }
    if (ref_station >= 0) {
      const auto& rs = reports[static_cast<std::size_t>(ref_station)];
      series.push_back(!rs.empty() && rs.back().frame_count > 0 ? rs.back().mean_agg : std::nullopt);
    }
    const std::uint32_t k = slot++;
    simr.schedule(simr.now() + from_seconds(s.controller.feedback_delay),
                  [this, k, by_bss = std::move(by_bss)](sim::Simulator& x) { tick(x, k, by_bss); });
    simr.schedule(from_seconds(static_cast<double>(slot + 1) * s.controller.params.delta),
                  [this](sim::Simulator& x) { on_slot(x); });
  }

  void tick(sim::Simulator& simr, std::uint32_t k, const std::vector<std::vector<meter::FeedbackReport>>& by_bss) {
    for (std::size_t b = 0; b < bss_members.size(); ++b) {
      auto& c = controllers[b];
      if (!c) continue;
      const auto before = c->log().size();
      const auto& x = c->tick(k, by_bss[b]);
      const auto& members = bss_members[b];
      for (std::size_t j = 0; j < members.size(); ++j) simr.set_send_rate(members[j], x.x[j]);
      for (auto i = before; i < c->log().size(); ++i) {
        auto row = c->log()[i];
        row.station = members[static_cast<std::size_t>(row.station)];
        if (row.i_star >= 0) row.i_star = members[static_cast<std::size_t>(row.i_star)];
        log.push_back(row);
      }
      if (static_cast<int>(b) == ref_bss) rates.push_back(simr.send_rate(ref_station));
    }
  }
};

}  // namespace

RunResult run_closed_loop(const Scenario& s, std::uint64_t seed) {
  validate(s);
  auto cfg = s.sim;
  if (s.controller.enabled) {
    for (auto& st : cfg.stations) {
      if (st.mode == sim::StationMode::Controlled) st.send_rate = s.controller.params.x_init;
    }
  }
  sim::Simulator simr(cfg, seed, s.trace);
  simr.set_delay_histogram_start(s.warmup);
  Loop loop(s);
  simr.set_frame_observer([&loop](const sim::FrameRecord& f, std::span<const sim::Delivery> d) {
    if (d.empty()) return;
    std::vector<std::uint64_t> seqs(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) seqs[i] = d[i].seq;
    loop.meters[static_cast<std::size_t>(f.station)].on_frame(to_micros(f.t_end), seqs, f.mcs_rate);
  });
  if (s.controller.enabled) {
    simr.schedule(from_seconds(s.controller.params.delta), [&loop](sim::Simulator& x) { loop.on_slot(x); });
  }
  simr.run_until(s.duration);

  RunResult out;
  out.stats = simr.stats();
  out.trace = simr.take_trace();
  out.trace.seed = seed;
  out.trace.duration = s.duration;
  out.trace.scenario = s.name;
  out.trace.controller_log = std::move(loop.log);
  out.reports = std::move(loop.reports);
  out.control_series = std::move(loop.series);
  out.rate_series = std::move(loop.rates);

  auto& m = out.summary;
  m = summarize_stats(out.stats, s.warmup, s.duration);
  m.scenario = s.name;
  m.hash = scenario_hash(s);
  m.seed = seed;
  m.theory_goodput = scenario_theory_goodput(s);
  if (s.controller.enabled && out.control_series.size() >= 20) {
    const auto c = control::convergence_metrics(out.control_series, s.controller.params);
    m.converged = c.converged;
    m.time_to_target = c.time_to_target;
    m.agg_std = c.std_after;
    double sum = 0;
    int n = 0;
    for (std::size_t i = c.converged ? c.slot : out.control_series.size() / 2; i < out.control_series.size(); ++i) {
      if (!out.control_series[i]) continue;
      sum += *out.control_series[i];
      ++n;
    }
    m.controlled_mean_agg = n ? sum / n : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

namespace {

std::vector<std::pair<Scenario, std::uint64_t>> expand(const Scenario& base, const std::string& axis,
                                                        const std::vector<std::string>& values) {
  std::vector<std::pair<Scenario, std::uint64_t>> points;
  for (const auto& v : values) {
    Scenario s = base;
    set_field(s, axis, v);
    validate(s);
    for (auto seed : s.seeds) points.emplace_back(s, seed);
  }
  return points;
}

SweepRow run_point(const std::pair<Scenario, std::uint64_t>& p, const std::string& value) {
  auto s = p.first;
  s.trace = sim::TraceOptions{false, false};
  return SweepRow{value, p.second, run_closed_loop(s, p.second).summary};
}

std::vector<std::string> point_values(const Scenario& base, const std::string& axis,
                                      const std::vector<std::string>& values) {
  std::vector<std::string> out;
  for (const auto& v : values) {
    Scenario s = base;
    set_field(s, axis, v);
    for (std::size_t i = 0; i < s.seeds.size(); ++i) out.push_back(v);
  }
  return out;
}

}  // namespace

std::vector<SweepRow> sweep(const Scenario& base, const std::string& axis, const std::vector<std::string>& values) {
  const auto points = expand(base, axis, values);
  const auto labels = point_values(base, axis, values);
  std::vector<SweepRow> rows(points.size());
  const auto n = static_cast<long>(points.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    rows[static_cast<std::size_t>(i)] = run_point(points[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(i)]);
  }
  return rows;
}

std::vector<SweepRow> sweep_serial(const Scenario& base, const std::string& axis,
                                   const std::vector<std::string>& values) {
  const auto points = expand(base, axis, values);
  const auto labels = point_values(base, axis, values);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) rows.push_back(run_point(points[i], labels[i]));
  return rows;
}

}  // namespace aggrate::harness
