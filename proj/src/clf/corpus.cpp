#include "aggrate/clf/corpus.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aggrate/clf/bottleneck.hpp"
#include "aggrate/sim/backhaul.hpp"
#include "aggrate/sim/simulator.hpp"

namespace aggrate::clf {

ClfTrace simulate_clf_trace(const ClfCorpusConfig& c, const ClfScenario& s, std::uint64_t seed) {
  sim::SimConfig cfg;
  cfg.ap.n_max = c.n_max;
  cfg.backhaul.enabled = true;
  cfg.backhaul.link_rate = s.link_rate;
  cfg.backhaul.queue_len = c.queue_len;
  cfg.backhaul.cross_rate = s.cross_rate;
  cfg.backhaul.cross_schedule = s.cross_schedule;
  sim::StationConfig st;
  st.mcs_rate = c.mcs_rate;
  st.send_rate = s.send_rate;
  cfg.stations.push_back(st);
  for (double r : s.extra_rates) {
    st.send_rate = r;
    cfg.stations.push_back(st);
  }
  sim::validate(cfg, s.duration);
  sim::Simulator simr(cfg, seed, {.packets = false, .frames = false});
  ClfTrace trace;
  trace.scenario = s;
  trace.seed = seed;
  const double bits = cfg.stations[0].packet_len;
  const SimTime start = from_seconds(c.warmup);
  simr.set_frame_observer([&](const sim::FrameRecord& f, std::span<const sim::Delivery> d) {
    if (f.station != 0 || f.t_end < start || d.empty()) return;
    ClfFrame fr;
    fr.t_us = static_cast<double>(f.t_end) / 1e3;
    fr.agg = static_cast<int>(d.size());
    for (const auto& x : d) fr.seqs.push_back(x.seq);
    const double cross = sim::schedule_value(s.cross_rate, s.cross_schedule, to_seconds(f.t_end));
    fr.label = s.send_rate > sim::available_backhaul_capacity(cfg.backhaul, bits, cross) ? 1 : 0;
    trace.frames.push_back(std::move(fr));
  });
  simr.run_until(s.duration);
  return trace;
}

ClfData clf_features(const ClfTrace& trace, int n, int p) {
  ClfFeatureBuilder b(n, p);
  std::vector<std::vector<double>> rows;
  ClfData out;
  std::vector<double> ys;
  for (const auto& f : trace.frames) {
    if (auto x = b.push(f.agg, f.seqs)) {
      rows.push_back(std::move(*x));
      ys.push_back(f.label);
      out.t_us.push_back(f.t_us);
    }
  }
  out.x.resize(static_cast<Eigen::Index>(rows.size()), n + 1);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int k = 0; k <= n; ++k) out.x(static_cast<Eigen::Index>(r), k) = rows[r][static_cast<std::size_t>(k)];
  out.y = Eigen::Map<const ml::Vector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return out;
}

ClfData concat(const std::vector<ClfData>& parts) {
  Eigen::Index rows = 0, cols = -1;
  for (const auto& p : parts) {
    if (p.x.rows() == 0) continue;
    if (cols >= 0 && p.x.cols() != cols) throw std::invalid_argument("clf concat: width mismatch");
    cols = p.x.cols();
    rows += p.x.rows();
  }
  ClfData out;
  out.x.resize(rows, std::max<Eigen::Index>(cols, 0));
  out.y.resize(rows);
  Eigen::Index o = 0;
  for (const auto& p : parts) {
    if (p.x.rows() == 0) continue;
    out.x.middleRows(o, p.x.rows()) = p.x;
    out.y.segment(o, p.y.size()) = p.y;
    out.t_us.insert(out.t_us.end(), p.t_us.begin(), p.t_us.end());
    o += p.x.rows();
  }
  return out;
}

std::vector<ClfScenario> default_clf_scenarios() {
  std::vector<ClfScenario> out;
  auto add = [&](double link, double rate, double duration) {
    ClfScenario s;
    s.link_rate = link;
    s.send_rate = rate;
    s.duration = duration;
    out.push_back(s);
  };
  for (double r : {20e6, 40e6, 60e6, 80e6, 120e6, 150e6, 200e6, 300e6, 400e6, 500e6, 600e6}) add(100e6, r, 1.0);
  for (double r : {50e6, 100e6, 200e6, 300e6, 400e6, 500e6, 600e6, 700e6}) add(1e9, r, 1.0);
  // Past the WLAN capacity: the AP queue overflows at full aggregation.
  for (double r : {800e6, 900e6}) add(1e9, r, 2.0);
  for (double r : {200e6, 300e6, 500e6, 600e6, 700e6}) {
    add(1e9, r, 2.0);
    out.back().cross_schedule = {{0.5, 600e6}, {1.0, 0.0}, {1.5, 600e6}};
  }
  return out;
}

void write_clf_csv(std::ostream& out, const ClfData& d, int n, const std::string& comment) {
  if (d.x.rows() > 0 && d.x.cols() != n + 1) throw std::invalid_argument("write_clf_csv: width is not n+1");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "frame";
  for (int k = 1; k <= n; ++k) out << ",N_" << k;
  out << ",loss,label,t_us\n";
  char buf[64];
  for (Eigen::Index r = 0; r < d.x.rows(); ++r) {
    out << r;
    for (Eigen::Index k = 0; k < d.x.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.6g", d.x(r, k));
      out << ',' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.3f", d.t_us[static_cast<std::size_t>(r)]);
    out << ',' << static_cast<int>(d.y[r]) << ',' << buf << '\n';
  }
}

ClfData read_clf_csv(std::istream& in, std::string* comment) {
  std::string line;
  if (comment) comment->clear();
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
    if (comment) *comment = line.size() > 2 ? line.substr(2) : "";
  }
  auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    return f;
  };
  const auto head = split(line);
  const auto cols = head.size();
  if (cols < 5 || head[0] != "frame" || head[cols - 3] != "loss" || head[cols - 2] != "label" || head[cols - 1] != "t_us")
    throw std::runtime_error("clf csv: unexpected header");
  const auto width = static_cast<Eigen::Index>(cols - 3);
  std::vector<double> xs, ys;
  ClfData d;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != cols) throw std::runtime_error("clf csv: wrong field count on line " + std::to_string(lineno));
    try {
      for (std::size_t k = 1; k + 2 < cols; ++k) xs.push_back(std::stod(f[k]));
      ys.push_back(std::stod(f[cols - 2]));
      d.t_us.push_back(std::stod(f[cols - 1]));
    } catch (const std::exception&) {
      throw std::runtime_error("clf csv: bad number on line " + std::to_string(lineno));
    }
  }
  d.x = Eigen::Map<const ml::Matrix>(xs.data(), static_cast<Eigen::Index>(ys.size()), width);
  d.y = Eigen::Map<const ml::Vector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return d;
}

std::string describe(const ClfScenario& s) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "link=%.6g send=%.6g cross=%d", s.link_rate, s.send_rate,
                s.cross_rate > 0 || !s.cross_schedule.empty() ? 1 : 0);
  return buf;
}

}  // namespace aggrate::clf
