#include "aggrate/tsml/corpus.hpp"

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "aggrate/sim/simulator.hpp"

namespace aggrate::tsml {

std::vector<double> TsRun::kernel_us() const {
  std::vector<double> t;
  t.reserve(packets.size());
  for (const auto& p : packets) t.push_back(p.t_us);
  return t;
}

std::vector<int> TsRun::labels() const {
  std::vector<int> y;
  y.reserve(packets.size());
  for (const auto& p : packets) y.push_back(p.first ? 1 : 0);
  return y;
}

TsRun simulate_ts_run(const TsCorpusConfig& c, double rate, std::uint64_t seed) {
  if (!(c.duration > c.warmup) || c.warmup < 0) throw std::invalid_argument("ts corpus: need 0 <= warmup < duration");
  sim::SimConfig cfg;
  cfg.ap.n_max = c.n_max;
  sim::StationConfig st;
  st.mcs_rate = c.mcs_rate;
  st.send_rate = rate;
  cfg.stations.push_back(st);
  auto trace = sim::run_scenario(cfg, c.duration, seed, {.packets = false, .frames = true});
  TsRun run;
  run.rate = rate;
  run.seed = seed;
  const SimTime start = from_seconds(c.warmup);
  for (const auto& f : trace.frames) {
    if (f.t_end >= start && f.n_agg - f.n_lost > 0) run.frames.push_back(f);
  }
  auto rng = Rng::stream(seed, 7);
  run.packets = kernel_noise(run.frames, c.noise, rng);
  return run;
}

std::vector<SlotStat> true_slot_stats(const TsRun& run, double slot_s) {
  std::vector<double> t, v;
  for (const auto& f : run.frames) {
    t.push_back(static_cast<double>(f.t_end) / 1e3);
    v.push_back(f.n_agg);
  }
  return slot_stats(t, v, slot_s);
}

std::vector<SlotStat> predicted_slot_stats(const TsRun& run, std::span<const int> labels, int n_max, double slot_s) {
  if (labels.size() != run.packets.size()) throw std::invalid_argument("predicted_slot_stats: one label per packet");
  std::vector<double> t, v;
  for (const auto& e : labels_to_agg_frames(labels, n_max)) {
    t.push_back(run.packets[e.first_packet].t_us);
    v.push_back(e.n);
  }
  return slot_stats(t, v, slot_s);
}

void write_ts_csv(std::ostream& out, const TsRun& run) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", run.rate);
  out << "# rate=" << buf << " seed=" << run.seed << '\n';
  out << "packet,kernel_us,label,frame\n";
  for (std::size_t i = 0; i < run.packets.size(); ++i) {
    const auto& p = run.packets[i];
    std::snprintf(buf, sizeof buf, "%.3f", p.t_us);
    out << i << ',' << buf << ',' << (p.first ? 1 : 0) << ',' << run.frames[static_cast<std::size_t>(p.frame)].frame_id << '\n';
  }
}

TsRun read_ts_csv(std::istream& in) {
  TsRun run;
  std::string line;
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
    std::istringstream ss(line.substr(1));
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const auto key = tok.substr(0, eq), value = tok.substr(eq + 1);
      if (key == "rate") run.rate = std::stod(value);
      else if (key == "seed") run.seed = std::stoull(value);
    }
  }
  if (line != "packet,kernel_us,label,frame") throw std::runtime_error("ts csv: unexpected header");
  std::map<std::uint64_t, int> index;  // true frame id -> position in run.frames
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[4];
    int k = 0;
    while (k < 4 && std::getline(ss, f[k], ',')) ++k;
    if (k != 4) throw std::runtime_error("ts csv: wrong field count on line " + std::to_string(lineno));
    KernelPacket p;
    std::uint64_t id = 0;
    try {
      p.t_us = std::stod(f[1]);
      p.first = std::stoi(f[2]) != 0;
      id = std::stoull(f[3]);
    } catch (const std::exception&) {
      throw std::runtime_error("ts csv: bad number on line " + std::to_string(lineno));
    }
    auto [it, fresh] = index.emplace(id, static_cast<int>(run.frames.size()));
    if (fresh) {
      sim::FrameRecord fr;
      fr.frame_id = id;
      fr.n_agg = 0;
      run.frames.push_back(fr);
    }
    p.frame = it->second;
    ++run.frames[static_cast<std::size_t>(p.frame)].n_agg;
    p.mac_us = 0.0;
    run.packets.push_back(p);
  }
  return run;
}

std::vector<SlotStat> kernel_truth_slot_stats(const TsRun& run, double slot_s) {
  std::vector<double> t, v;
  std::int64_t last = -1;
  for (const auto& p : run.packets) {
    if (p.frame == last) continue;
    last = p.frame;
    t.push_back(p.t_us);
    v.push_back(run.frames[static_cast<std::size_t>(p.frame)].n_agg);
  }
  return slot_stats(t, v, slot_s);
}

}  // namespace aggrate::tsml
