// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "../sim_oracle.hpp"
#include "aggrate/clf/bottleneck.hpp"
#include "aggrate/common/rng.hpp"
#include "aggrate/control/controller.hpp"
#include "aggrate/harness/models.hpp"
#include "aggrate/harness/run.hpp"
#include "aggrate/ml/kernel_ridge.hpp"
#include "aggrate/ml/logistic.hpp"
#include "aggrate/sim/mac.hpp"

using namespace aggrate;
using namespace aggrate::harness;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Scenario closed_loop_base() {
  auto s = default_scenario();
  s.controller.enabled = true;
  return s;
}

// Per-value medians of one summary column over the seeds of a sweep.
std::vector<double> medians(const std::vector<SweepRow>& rows, const std::vector<std::string>& values,
                            const std::function<double(const MetricSummary&)>& col) {
  std::vector<double> out;
  for (const auto& v : values) {
    std::vector<double> xs;
    for (const auto& r : rows)
      if (r.axis_value == v) xs.push_back(col(r.summary));
    out.push_back(median(xs));
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome open_loop_sweep() {
  Outcome o;
  const auto t0 = Clock::now();
  auto s = default_scenario();
  s.duration = 10;
  s.warmup = 2;
  s.seeds = {1};
  std::vector<std::string> values{"10e6"};
  for (int r = 50; r <= 600; r += 50) values.push_back(std::to_string(r) + "e6");
  const auto rows = sweep(s, "station.send_rate", values);
  const int n_max = s.sim.ap.n_max;
  bool agg_ok = true, delay_ok = true, loss_ok = true;
  double best_agg = 0, prev_delay = 0;
  for (const auto& r : rows) {
    const auto& m = r.summary;
    agg_ok = agg_ok && m.mean_agg >= best_agg - 2;
    best_agg = std::max(best_agg, m.mean_agg);
    delay_ok = delay_ok && m.mean_delay >= prev_delay;
    prev_delay = m.mean_delay;
    if (m.drop_ap > 0) loss_ok = loss_ok && m.mean_agg >= 0.9 * n_max;
  }
  const double el = seconds_since(t0);
  o.check(agg_ok, fmt("aggregation non-decreasing (last %.1f)", rows.back().summary.mean_agg));
  o.check(delay_ok, fmt("delay non-decreasing (%.2f -> %.2f ms)", rows.front().summary.mean_delay * 1e3,
                        rows.back().summary.mean_delay * 1e3));
  o.check(loss_ok, "AP overflow only at >= 0.9 N_max");
  o.check(el < 120, fmt("%.1f s", el));
  return o;
}

Outcome theory_line() {
  Outcome o;
  sim::GoodputQuery q;
  q.n_eps = 32;
  q.mcs_rate_per_stream = 390e6;
  q.nss = 1;
  const double g1 = sim::theoretical_goodput(q);
  q.nss = 2;
  const double g32 = sim::theoretical_goodput(q);
  q.n_eps = 64;
  const double g64 = sim::theoretical_goodput(q);
  o.check(std::abs(g1 - 307e6) <= 5e6, fmt("NSS1 N=32 %.1f Mb/s", g1 / 1e6));
  o.check(std::abs(g64 - 615e6) <= 0.05 * 615e6, fmt("NSS2 N=64 %.1f Mb/s", g64 / 1e6));
  o.check(std::abs(g32 - 515e6) <= 0.05 * 515e6, fmt("NSS2 N=32 %.1f Mb/s", g32 / 1e6));
  return o;
}

Outcome closed_loop_regulation() {
  Outcome o;
  const auto t0 = Clock::now();
  auto s = closed_loop_base();
  s.duration = 60;
  s.warmup = 20;
  s.controller.params.delta = 0.5;
  s.controller.params.k0 = 1;
  s.controller.params.n_eps = 32;
  const auto r = run_closed_loop(s, 1);
  const auto whole = summarize_stats(r.stats, 0, s.duration);
  auto sat = s;
  sat.controller.enabled = false;
  sat.sim.stations[0].send_rate = 1e9;
  const auto rs = run_closed_loop(sat, 1);
  const double el = seconds_since(t0);
  const auto& m = r.summary;
  o.check(m.converged && m.controlled_mean_agg >= 28 && m.controlled_mean_agg <= 36,
          fmt("post-convergence N %.2f", m.controlled_mean_agg));
  o.check(whole.drop_ap == 0, fmt("overflow losses %.0f", static_cast<double>(whole.drop_ap)));
  o.check(m.mean_delay <= 0.25 * rs.summary.mean_delay,
          fmt("delay %.2f ms vs saturated %.2f ms", m.mean_delay * 1e3, rs.summary.mean_delay * 1e3));
  o.check(el < 60, fmt("%.1f s", el));
  return o;
}

Outcome gain_interval_study() {
  Outcome o;
  auto s = closed_loop_base();
  s.duration = 300;
  s.sim.stations[0].mcs_rate = 390e6;
  s.controller.params.delta = 1.0;

  const std::vector<std::string> gains{"0.25", "0.5", "1", "2"};
  const auto rows = sweep(s, "controller.k0", gains);
  const auto ttt = medians(rows, gains, [](const MetricSummary& m) { return m.time_to_target; });
  bool dec = true;
  for (std::size_t i = 1; i < ttt.size(); ++i) dec = dec && ttt[i] < ttt[i - 1];
  o.check(dec, fmt("time-to-target %.0f/%.0f/%.0f", ttt[0], ttt[1], ttt[2]) + fmt("/%.0f s", ttt[3]));

  const auto k1_std = medians(rows, {"1"}, [](const MetricSummary& m) { return m.agg_std; })[0];
  const auto hot = sweep(s, "controller.k0", {"10"});
  bool none = true;
  std::vector<double> hot_std;
  for (const auto& r : hot) {
    none = none && !r.summary.converged;
    hot_std.push_back(r.summary.agg_std);
  }
  o.check(none && median(hot_std) >= 2 * k1_std, fmt("K0=10 std %.2f vs K0=1 %.2f", median(hot_std), k1_std));

  const std::vector<std::string> deltas{"0.25", "0.5", "1", "2", "4"};
  const auto drows = sweep(s, "controller.delta", deltas);
  const auto sd = medians(drows, deltas, [](const MetricSummary& m) { return m.agg_std; });
  const auto best = static_cast<std::size_t>(std::min_element(sd.begin(), sd.end()) - sd.begin());
  std::string line = "std by delta";
  for (double v : sd) line += fmt(" %.3f", v);
  o.check(best != 0 && best + 1 != sd.size(), line + " (min at " + deltas[best] + " s)");
  return o;
}

Outcome channel_drop() {
  Outcome o;
  auto s = closed_loop_base();
  s.duration = 120;
  s.controller.params.delta = 1.0;
  const double t_drop = 60;
  s.sim.stations[0].mcs_schedule = {{t_drop, s.sim.stations[0].mcs_rate / 2}};
  const auto r = run_closed_loop(s, 1);
  const auto& series = r.control_series;
  const int n_max = s.sim.ap.n_max;
  const auto k_drop = static_cast<std::size_t>(t_drop / s.controller.params.delta);

  // Saturation phase: consecutive post-drop slots pinned near N_max.
  std::size_t first = k_drop;
  while (first < series.size() && !(series[first] && *series[first] >= 0.9 * n_max)) ++first;
  std::size_t sat = 0;
  while (first + sat < series.size() && series[first + sat] && *series[first + sat] >= 0.9 * n_max) ++sat;
  o.check(sat <= 8, fmt("saturation phase %.0f rounds", static_cast<double>(sat)));

  const std::vector<std::optional<double>> after(series.begin() + static_cast<long>(k_drop), series.end());
  const auto c = control::convergence_metrics(after, s.controller.params);
  const double t_re = t_drop + static_cast<double>(c.slot) * s.controller.params.delta;
  const auto tail = summarize_stats(r.stats, t_re, s.duration);
  o.check(c.converged && tail.drop_ap == 0,
          fmt("re-converged at %.0f s, %.0f losses after", t_re, static_cast<double>(tail.drop_ap)));

  auto mean_rate = [&](std::size_t from, std::size_t to) {
    double sum = 0;
    for (std::size_t k = from; k < to; ++k) sum += r.rate_series[k];
    return sum / static_cast<double>(to - from);
  };
  const double before = mean_rate(k_drop - 10, k_drop - 1);
  const double end = mean_rate(r.rate_series.size() - 10, r.rate_series.size());
  const double ratio = end / before;
  o.check(std::abs(ratio - 0.5) <= 0.15, fmt("rate %.0f -> %.0f Mb/s (ratio %.3f)", before / 1e6, end / 1e6, ratio));
  return o;
}

Outcome fairness() {
  Outcome o;
  std::vector<double> ns, delays;
  double worst_jain = 1;
  for (int n : {2, 5, 10, 20}) {
    auto s = closed_loop_base();
    s.duration = 60;
    s.warmup = 30;
    s.sim.stations.assign(static_cast<std::size_t>(n), s.sim.stations[0]);
    const auto r = run_closed_loop(s, 1);
    worst_jain = std::min(worst_jain, r.summary.jain);
    ns.push_back(n);
    delays.push_back(r.summary.mean_delay * 1e3);
  }
  o.check(worst_jain >= 0.99, fmt("min Jain %.4f", worst_jain));

  const double mx = std::accumulate(ns.begin(), ns.end(), 0.0) / 4, my = std::accumulate(delays.begin(), delays.end(), 0.0) / 4;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sxy += (ns[i] - mx) * (delays[i] - my);
    sxx += (ns[i] - mx) * (ns[i] - mx);
    syy += (delays[i] - my) * (delays[i] - my);
  }
  const double slope = sxy / sxx, r2 = sxy * sxy / (sxx * syy);
  o.check(slope > 0 && r2 >= 0.8, fmt("delay slope %.3f ms/station, R2 %.3f", slope, r2));

  auto s = closed_loop_base();
  s.duration = 60;
  s.warmup = 30;
  const auto base = s.sim.stations[0];
  s.sim.stations.clear();
  for (double mcs : {780e6, 585e6, 390e6, 195e6}) {
    auto st = base;
    st.mcs_rate = mcs;
    s.sim.stations.push_back(st);
  }
  const auto r = run_closed_loop(s, 1);
  const auto& air = r.summary.station_airtime;
  const double ratio = *std::max_element(air.begin(), air.end()) / *std::min_element(air.begin(), air.end());
  o.check(ratio <= 1.1, fmt("airtime max/min %.3f", ratio));
  return o;
}

struct MixResult {
  double ctrl_goodput = 0, ctrl_delay = 0, legacy_goodput = 0, legacy_delay = 0;
};

MixResult mixed(int controlled, int legacy, bool separate_bss) {
  auto s = closed_loop_base();
  s.duration = 60;
  s.warmup = 30;
  const auto base = s.sim.stations[0];
  s.sim.stations.clear();
  for (int i = 0; i < controlled; ++i) s.sim.stations.push_back(base);
  for (int i = 0; i < legacy; ++i) {
    auto st = base;
    st.bss = separate_bss ? 1 : 0;
    st.mode = sim::StationMode::LegacySaturated;
    s.sim.stations.push_back(st);
  }
  const auto m = run_closed_loop(s, 1).summary;
  MixResult out;
  for (int i = 0; i < controlled + legacy; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (i < controlled) {
      out.ctrl_goodput += m.station_goodput[k] / controlled;
      out.ctrl_delay += m.station_delay[k] / controlled;
    } else {
      out.legacy_goodput += m.station_goodput[k] / legacy;
      out.legacy_delay += m.station_delay[k] / legacy;
    }
  }
  return out;
}

Outcome coexistence() {
  Outcome o;
  const auto two = mixed(5, 5, true);
  o.check(two.legacy_goodput > two.ctrl_goodput,
          fmt("goodput legacy %.1f vs controlled %.1f Mb/s", two.legacy_goodput / 1e6, two.ctrl_goodput / 1e6));
  o.check(two.ctrl_delay <= 0.5 * two.legacy_delay,
          fmt("delay controlled %.2f vs legacy %.2f ms", two.ctrl_delay * 1e3, two.legacy_delay * 1e3));
  const auto shared = mixed(5, 5, false);
  o.check(shared.ctrl_delay < 12e-3, fmt("shared AP controlled delay %.2f ms", shared.ctrl_delay * 1e3));
  return o;
}

Outcome bookkeeping() {
  Outcome o;
  int mismatches = 0, unattributed = 0;
  std::uint64_t packets = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    Rng rng(seed);
    sim::SimConfig c;
    sim::StationConfig st;
    st.send_rate = 10e6 + rng.uniform() * 390e6;
    st.rate_schedule = {{0.3, 0.0}};
    c.stations.push_back(st);
    c.ap.per_packet_error_prob = rng.uniform() * 0.3;
    c.ap.retry_limit = 1 + static_cast<int>(rng.below(7));
    c.ap.queue_capacity = 100000;  // overflow would break the send-sequence oracle
    const auto t = sim::run_scenario(c, 0.5, seed);
    const auto chk = testing::check_bookkeeping(t, 0, c.ap.n_max);
    mismatches += chk.truth != chk.inferred;
    unattributed += chk.unattributed != 0;
    packets += chk.truth;
  }
  o.check(mismatches == 0 && unattributed == 0,
          fmt("%.0f mismatching traces, %.0f with unattributed holes", mismatches, unattributed) +
              fmt(", %.0f packets", static_cast<double>(packets)));
  return o;
}

struct BoundaryModels {
  std::vector<tsml::TsRun> train, test;
  tsml::BoundaryModel m20, m1;
  tsml::BoundaryFeatures d20;
};

const BoundaryModels& boundary_models() {
  static const BoundaryModels b = [] {
    BoundaryModels out;
    auto spec = default_boundary_corpus();
    out.train = simulate_ts_runs(spec);
    spec.seeds = {100};
    out.test = simulate_ts_runs(spec);
    out.d20 = boundary_training_set(out.train, 20, true);
    out.m20 = tsml::train_boundary(out.d20, 20, true);
    out.m1 = tsml::train_boundary(boundary_training_set(out.train, 1, false), 1, false);
    return out;
  }();
  return b;
}

Outcome boundary_estimator() {
  Outcome o;
  const auto& b = boundary_models();
  std::vector<BoundaryEval> e20, e1;
  for (const auto& r : b.test) {
    e20.push_back(evaluate_boundary(b.m20, r));
    e1.push_back(evaluate_boundary(b.m1, r));
  }
  const double low = pooled_f1(e20, LoadRegime::Low), mid = pooled_f1(e20, LoadRegime::Mid);
  o.check(low >= 0.9 && mid >= 0.9, fmt("F1 low %.4f mid %.4f", low, mid));
  const double h20 = pooled_f1(e20, LoadRegime::High), h1 = pooled_f1(e1, LoadRegime::High);
  o.check(h20 - h1 >= 0.05, fmt("high load F1 %.4f vs m=1 %.4f", h20, h1));
  const auto cv = ml::cross_validate_logistic(b.d20.x, b.d20.y, 20, 1);
  o.check(cv.stddev <= 0.02, fmt("20-fold CV F1 %.4f std %.4f", cv.mean, cv.stddev));
  return o;
}

Outcome rbf_corrector() {
  Outcome o;
  const auto& b = boundary_models();
  auto spec = default_boundary_corpus();
  spec.config.duration = 2.2;
  spec.rates.clear();
  for (int r = 50; r <= 800; r += 25) spec.rates.push_back(r * 1e6);
  spec.seeds = {1, 2, 3};
  const auto runs = simulate_ts_runs(spec);
  const auto t = train_rbf_corrector(slot_rows(runs, b.m20, 5, 128), 5, 128, {0.01, 0.03, 0.1, 0.3, 1.0},
                                     {1e-3, 1e-2, 1e-1, 1.0}, 5, 1);
  spec.rates = {550e6, 600e6, 650e6, 700e6};
  spec.seeds = {100, 101, 102};
  const auto e = slot_rmse(slot_rows(simulate_ts_runs(spec), b.m20, 5, 128), t.model);
  o.check(e.corrected <= 0.5 * e.raw, fmt("high-load slot RMSE %.2f -> %.2f over %.0f slots", e.raw, e.corrected,
                                          static_cast<double>(e.n)));
  return o;
}

// Time from each cross-traffic toggle until the detector state first equals
// the new ground truth (0 when it already does).
std::vector<double> detection_latencies(const clf::ClfData& d, const std::vector<int>& labels, int h,
                                        const std::vector<double>& toggles_us, int* flaps) {
  const auto events = clf::detect_transitions(d.t_us, labels, h);
  if (flaps) *flaps = static_cast<int>(events.size());
  auto state_at = [&](double t) {
    int st = 0;
    for (const auto& e : events)
      if (e.t_us <= t) st = e.to;
    return st;
  };
  auto truth_at = [&](double t) {
    int y = 0;
    for (Eigen::Index i = 0; i < d.y.size() && d.t_us[static_cast<std::size_t>(i)] <= t; ++i) y = static_cast<int>(d.y[i]);
    return y;
  };
  std::vector<double> out;
  for (double tg : toggles_us) {
    const int want = truth_at(tg + 50e3);  // truth settled just after the toggle
    if (state_at(tg) == want) {
      out.push_back(0);
      continue;
    }
    double lat = std::numeric_limits<double>::infinity();
    for (const auto& e : events) {
      if (e.t_us >= tg && e.to == want) {
        lat = e.t_us - tg;
        break;
      }
    }
    out.push_back(lat);
  }
  return out;
}

Outcome bottleneck_classifier() {
  Outcome o;
  clf::ClfCorpusConfig cfg;
  const auto scenarios = clf::default_clf_scenarios();
  const auto train = simulate_clf_traces(cfg, scenarios, {1, 2});
  const auto test = simulate_clf_traces(cfg, scenarios, {100});
  const auto model = train_clf_balanced(clf_dataset(train, 5, 100), 5, 100, 1);
  const double f1 = clf_f1(model, clf_dataset(test, 5, 100));
  o.check(f1 >= 0.95, fmt("held-out F1 %.4f (n=5, p=100)", f1));

  double worst = 1;
  std::string where;
  for (int n : {1, 3, 5, 10}) {
    for (int p : {25, 50, 100, 200, 400}) {
      const double g = clf_f1(train_clf_balanced(clf_dataset(train, n, p), n, p, 1), clf_dataset(test, n, p));
      if (g < worst) {
        worst = g;
        where = fmt(" at n=%.0f p=%.0f", n, p);
      }
    }
  }
  o.check(worst >= 0.9, fmt("grid min F1 %.4f", worst) + where);

  // Cross traffic toggled on and off twice on a gigabit link.
  clf::ClfScenario sc;
  sc.send_rate = 500e6;
  sc.duration = 4.0;
  sc.cross_schedule = {{0.5, 600e6}, {1.3, 0}, {2.1, 600e6}, {2.9, 0}};
  std::vector<double> toggles;
  for (const auto& st : sc.cross_schedule) toggles.push_back(st.at * 1e6);
  double worst_on = 0, worst_off = 0;
  std::string sens;
  for (int h : {1, 3, 5}) {
    double wh = 0;
    int flaps_total = 0;
    std::vector<int> truth_all, pred_all;
    for (std::uint64_t seed : {55, 56, 57}) {
      const auto d = clf::clf_features(clf::simulate_clf_trace(cfg, sc, seed), 5, 100);
      std::vector<int> labels;
      for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
        const ml::Vector row = d.x.row(i).transpose();
        labels.push_back(model.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
        truth_all.push_back(static_cast<int>(d.y[i]));
      }
      pred_all.insert(pred_all.end(), labels.begin(), labels.end());
      int flaps = 0;
      const auto lat = detection_latencies(d, labels, h, toggles, &flaps);
      flaps_total += flaps;
      for (std::size_t k = 0; k < lat.size(); ++k) {
        wh = std::max(wh, lat[k]);
        if (h == 3) (k % 2 == 0 ? worst_on : worst_off) = std::max(k % 2 == 0 ? worst_on : worst_off, lat[k]);
      }
    }
    sens += fmt(" h=%.0f: %.1f ms/%.0f events", h, wh / 1e3, flaps_total);
    if (h == 3) sens += fmt(" (frame F1 %.3f)", ml::f1_score(truth_all, pred_all));
  }
  o.check(worst_on <= 100e3 && worst_off <= 100e3,
          fmt("h=3 detection on %.1f ms, off %.1f ms;", worst_on / 1e3, worst_off / 1e3) + sens);
  return o;
}

Outcome numerics() {
  Outcome o;
  Rng rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(5 + rng.below(30));
    const auto d = static_cast<Eigen::Index>(1 + rng.below(6));
    ml::Matrix x(n, d);
    ml::Vector y(n), w(d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    for (auto& v : w) v = rng.normal();
    const double b = rng.normal(), l2 = rng.uniform() * 0.1, h = 1e-5;
    ml::Vector g;
    double gb = 0;
    ml::logistic_loss(x, y, w, b, l2, &g, &gb);
    auto rel = [](double a, double e) { return std::abs(a - e) / std::max(1e-8, std::max(std::abs(a), std::abs(e))); };
    for (Eigen::Index j = 0; j < d; ++j) {
      ml::Vector wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (ml::logistic_loss(x, y, wp, b, l2) - ml::logistic_loss(x, y, wm, b, l2)) / (2 * h);
      worst = std::max(worst, rel(g[j], fd));
    }
    worst = std::max(worst, rel(gb, (ml::logistic_loss(x, y, w, b + h, l2) - ml::logistic_loss(x, y, w, b - h, l2)) / (2 * h)));
  }
  o.check(worst < 1e-6, fmt("gradient max rel err %.2e", worst));

  bool bound_ok = true;
  double tightest = 1e9;
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = std::pow(10.0, -3 + 4 * rng.uniform());
    ml::Matrix x(60, 3);
    ml::Vector y(60);
    for (Eigen::Index i = 0; i < 60; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = rng.normal();
      y[i] = std::sin(x(i, 0)) + 0.2 * rng.normal();
    }
    const auto m = ml::train_kernel_ridge(x, y, 0.5, lambda);
    const ml::Vector centred = y.array() - m.bias;
    const ml::Vector r = y - m.predict(x);
    const ml::Matrix k = ml::gram_matrix_serial(m.support, m.support, m.gamma);
    const double mu = Eigen::SelfAdjointEigenSolver<ml::Matrix>(k).eigenvalues().maxCoeff();
    const double lo = lambda / (mu + lambda) * centred.norm();
    bound_ok = bound_ok && r.norm() <= centred.norm() + 1e-9 && r.norm() >= lo - 1e-9;
    tightest = std::min(tightest, r.norm() - lo);
  }
  o.check(bound_ok, fmt("KRR residual within [lambda/(mu+lambda), 1]·|y-b| (min slack %.2e)", tightest));
  return o;
}

Outcome performance(Clock::time_point suite_start) {
  Outcome o;
  auto s = closed_loop_base();
  s.duration = 60;
  s.sim.stations.assign(10, s.sim.stations[0]);
  const auto t0 = Clock::now();
  const auto r = run_closed_loop(s, 1);
  const double el = seconds_since(t0);
  o.check(el < 60, fmt("10 stations x 60 s in %.2f s, %.1f Mb/s delivered", el, r.summary.goodput / 1e6));
  const double total = seconds_since(suite_start);
  o.check(total < 900, fmt("suite %.1f s", total));
  return o;
}

}  // namespace

int main() {
  const auto start = Clock::now();
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "open-loop sweep", open_loop_sweep},
      {2, "theory line", theory_line},
      {3, "closed-loop regulation", closed_loop_regulation},
      {4, "gain and interval study", gain_interval_study},
      {5, "channel drop", channel_drop},
      {6, "fairness", fairness},
      {7, "coexistence", coexistence},
      {8, "book-keeping oracle", bookkeeping},
      {9, "boundary estimator", boundary_estimator},
      {10, "rbf corrector", rbf_corrector},
      {11, "bottleneck classifier", bottleneck_classifier},
      {12, "numerics", numerics},
      {13, "performance", [&] { return performance(start); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
              seconds_since(start));
  return failed ? 1 : 0;
}
