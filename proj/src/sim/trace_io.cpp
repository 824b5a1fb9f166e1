#include "aggrate/sim/trace_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace aggrate::sim {

namespace {

const FrameRecord* find_frame(const Trace& trace, std::uint64_t id,
                              const std::unordered_map<std::uint64_t, std::size_t>& index) {
  if (id < trace.frames.size() && trace.frames[id].frame_id == id) return &trace.frames[id];
  auto it = index.find(id);
  return it == index.end() ? nullptr : &trace.frames[it->second];
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_packets_csv(std::ostream& out, const Trace& trace) {
  std::unordered_map<std::uint64_t, std::size_t> index;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    if (trace.frames[i].frame_id != i) index.emplace(trace.frames[i].frame_id, i);
  }
  out << "seq,station,t_send,t_ap_arrival,frame_id,n_agg,mcs_rate,t_mac_rx,t_kernel_rx,dropped,is_retx\n";
  for (const auto& p : trace.packets) {
    out << p.seq << ',' << p.station << ',' << to_micros(p.t_send) << ',';
    if (p.t_ap_arrival != kNever) out << to_micros(p.t_ap_arrival);
    out << ',';
    const FrameRecord* f = p.frame_id ? find_frame(trace, *p.frame_id, index) : nullptr;
    if (p.frame_id) out << *p.frame_id;
    out << ',';
    if (f) out << f->n_agg;
    out << ',';
    if (f) out << static_cast<std::uint64_t>(f->mcs_rate);
    out << ',';
    if (p.t_mac_rx_us) out << *p.t_mac_rx_us;
    out << ',';
    if (p.t_kernel_rx_us) out << *p.t_kernel_rx_us;
    out << ',' << (p.dropped ? 1 : 0) << ',' << (f && f->is_retx ? 1 : 0) << '\n';
  }
}

void write_frames_csv(std::ostream& out, const Trace& trace) {
  out << "frame_id,station,n_agg,mcs_rate,t_start,t_end,is_retx,collided,n_lost\n";
  for (const auto& f : trace.frames) {
    out << f.frame_id << ',' << f.station << ',' << f.n_agg << ','
        << static_cast<std::uint64_t>(f.mcs_rate) << ',' << to_micros(f.t_start) << ','
        << to_micros(f.t_end) << ',' << (f.is_retx ? 1 : 0) << ',' << (f.collided ? 1 : 0) << ','
        << f.n_lost << '\n';
  }
}

void write_controller_log_csv(std::ostream& out, const Trace& trace) {
  out << "slot,station,mean_agg,mean_mcs,x_before,x_after,i_star\n";
  for (const auto& r : trace.controller_log) {
    out << r.slot << ',' << r.station << ',';
    if (r.mean_agg) out << *r.mean_agg;
    out << ',' << r.mean_mcs << ',' << r.x_before << ',' << r.x_after << ',' << r.i_star << '\n';
  }
}

std::vector<PacketRecord> read_packets_csv(std::istream& in) {
  std::vector<PacketRecord> out;
  std::string line;
  if (!std::getline(in, line)) return out;
  if (line.rfind("seq,station,t_send", 0) != 0) throw std::runtime_error("packet csv: bad header");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) throw std::runtime_error("packet csv: wrong column count at row " + std::to_string(row));
    PacketRecord p;
    p.seq = std::stoull(f[0]);
    p.station = std::stoi(f[1]);
    p.t_send = std::stoll(f[2]) * kNsPerUs;
    if (!f[3].empty()) p.t_ap_arrival = std::stoll(f[3]) * kNsPerUs;
    if (!f[4].empty()) p.frame_id = std::stoull(f[4]);
    if (!f[7].empty()) p.t_mac_rx_us = std::stoll(f[7]);
    if (!f[8].empty()) p.t_kernel_rx_us = std::stoll(f[8]);
    p.dropped = f[9] == "1";
    out.push_back(p);
  }
  return out;
}

}  // namespace aggrate::sim
