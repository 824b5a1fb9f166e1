#include "aggrate/harness/scenario.hpp"

#include <charconv>
#include <cstdio>
#include <optional>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "aggrate/common/error.hpp"

namespace aggrate::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double to_double(const std::string& field, const std::string& v) {
  double out = 0;
  const auto t = trim(v);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size()) throw ConfigError(field, "not a number: '" + v + "'");
  return out;
}

long long to_int(const std::string& field, const std::string& v) {
  long long out = 0;
  const auto t = trim(v);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size()) throw ConfigError(field, "not an integer: '" + v + "'");
  return out;
}

bool to_bool(const std::string& field, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(field, "not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<sim::ScheduleStep> to_schedule(const std::string& field, const std::string& v) {
  std::vector<sim::ScheduleStep> out;
  for (const auto& item : split_list(v)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError(field, "schedule entries are time:value");
    out.push_back({to_double(field, item.substr(0, colon)), to_double(field, item.substr(colon + 1))});
  }
  return out;
}

std::string schedule_text(const std::vector<sim::ScheduleStep>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += ", ";
    out += fmt(steps[i].at) + ":" + fmt(steps[i].value);
  }
  return out;
}

using Setter = std::function<void(const std::string& field, const std::string& value)>;

std::map<std::string, Setter> top_setters(Scenario& s) {
  return {
      {"name", [&](auto&, auto& v) { s.name = trim(v); }},
      {"version", [&](auto& f, auto& v) { s.version = static_cast<int>(to_int(f, v)); }},
      {"duration", [&](auto& f, auto& v) { s.duration = to_double(f, v); }},
      {"warmup", [&](auto& f, auto& v) { s.warmup = to_double(f, v); }},
      {"seeds",
       [&](auto& f, auto& v) {
         s.seeds.clear();
         for (const auto& x : split_list(v)) s.seeds.push_back(static_cast<std::uint64_t>(to_int(f, x)));
       }},
  };
}

std::map<std::string, Setter> ap_setters(sim::ApConfig& a) {
  return {
      {"n_max", [&](auto& f, auto& v) { a.n_max = static_cast<int>(to_int(f, v)); }},
      {"queue_capacity", [&](auto& f, auto& v) { a.queue_capacity = static_cast<int>(to_int(f, v)); }},
      {"phy_overhead", [&](auto& f, auto& v) { a.phy_overhead = to_double(f, v); }},
      {"mpdu_overhead_bits", [&](auto& f, auto& v) { a.mpdu_overhead_bits = to_double(f, v); }},
      {"l3_header_bits", [&](auto& f, auto& v) { a.l3_header_bits = to_double(f, v); }},
      {"difs", [&](auto& f, auto& v) { a.difs = to_double(f, v); }},
      {"sifs", [&](auto& f, auto& v) { a.sifs = to_double(f, v); }},
      {"slot_time", [&](auto& f, auto& v) { a.slot_time = to_double(f, v); }},
      {"cw_min", [&](auto& f, auto& v) { a.cw_min = static_cast<int>(to_int(f, v)); }},
      {"cw_max", [&](auto& f, auto& v) { a.cw_max = static_cast<int>(to_int(f, v)); }},
      {"per_packet_error_prob", [&](auto& f, auto& v) { a.per_packet_error_prob = to_double(f, v); }},
      {"retry_limit", [&](auto& f, auto& v) { a.retry_limit = static_cast<int>(to_int(f, v)); }},
      {"beacon_pps", [&](auto& f, auto& v) { a.beacon_pps = to_double(f, v); }},
      {"beacon_airtime", [&](auto& f, auto& v) { a.beacon_airtime = to_double(f, v); }},
      {"feedback_airtime", [&](auto& f, auto& v) { a.feedback_airtime = to_double(f, v); }},
  };
}

std::map<std::string, Setter> backhaul_setters(sim::BackhaulConfig& b) {
  return {
      {"enabled", [&](auto& f, auto& v) { b.enabled = to_bool(f, v); }},
      {"link_rate", [&](auto& f, auto& v) { b.link_rate = to_double(f, v); }},
      {"queue_len", [&](auto& f, auto& v) { b.queue_len = static_cast<int>(to_int(f, v)); }},
      {"frame_overhead_bits", [&](auto& f, auto& v) { b.frame_overhead_bits = to_double(f, v); }},
      {"cross_rate", [&](auto& f, auto& v) { b.cross_rate = to_double(f, v); }},
      {"cross_schedule", [&](auto& f, auto& v) { b.cross_schedule = to_schedule(f, v); }},
      {"cross_packet_len", [&](auto& f, auto& v) { b.cross_packet_len = to_double(f, v); }},
      {"cross_poisson", [&](auto& f, auto& v) { b.cross_poisson = to_bool(f, v); }},
  };
}

std::map<std::string, Setter> controller_setters(ControllerSection& c) {
  auto& p = c.params;
  return {
      {"enabled", [&](auto& f, auto& v) { c.enabled = to_bool(f, v); }},
      {"k0", [&](auto& f, auto& v) { p.k0 = to_double(f, v); }},
      {"delta", [&](auto& f, auto& v) { p.delta = to_double(f, v); }},
      {"n_eps", [&](auto& f, auto& v) { p.n_eps = to_double(f, v); }},
      {"x_min", [&](auto& f, auto& v) { p.x_min = to_double(f, v); }},
      {"x_max", [&](auto& f, auto& v) { p.x_max = to_double(f, v); }},
      {"x_init", [&](auto& f, auto& v) { p.x_init = to_double(f, v); }},
      {"literal_station_mean", [&](auto& f, auto& v) { p.literal_station_mean = to_bool(f, v); }},
      {"feedback_delay", [&](auto& f, auto& v) { c.feedback_delay = to_double(f, v); }},
      {"feedback_frames", [&](auto& f, auto& v) { c.feedback_frames = to_bool(f, v); }},
  };
}

std::map<std::string, Setter> trace_setters(sim::TraceOptions& t) {
  return {
      {"packets", [&](auto& f, auto& v) { t.packets = to_bool(f, v); }},
      {"frames", [&](auto& f, auto& v) { t.frames = to_bool(f, v); }},
  };
}

std::map<std::string, Setter> station_setters(sim::StationConfig& s) {
  return {
      {"bss", [&](auto& f, auto& v) { s.bss = static_cast<int>(to_int(f, v)); }},
      {"mcs_rate", [&](auto& f, auto& v) { s.mcs_rate = to_double(f, v); }},
      {"mcs_schedule", [&](auto& f, auto& v) { s.mcs_schedule = to_schedule(f, v); }},
      {"packet_len", [&](auto& f, auto& v) { s.packet_len = to_double(f, v); }},
      {"mode",
       [&](auto& f, auto& v) {
         const auto t = trim(v);
         if (t == "controlled") s.mode = sim::StationMode::Controlled;
         else if (t == "legacy") s.mode = sim::StationMode::LegacySaturated;
         else throw ConfigError(f, "mode is controlled or legacy");
       }},
      {"send_rate", [&](auto& f, auto& v) { s.send_rate = to_double(f, v); }},
      {"rate_schedule", [&](auto& f, auto& v) { s.rate_schedule = to_schedule(f, v); }},
  };
}

std::map<std::string, Setter> contender_setters(sim::ContenderConfig& c) {
  return {
      {"frame_airtime", [&](auto& f, auto& v) { c.frame_airtime = to_double(f, v); }},
      {"mean_on", [&](auto& f, auto& v) { c.mean_on = to_double(f, v); }},
      {"mean_off", [&](auto& f, auto& v) { c.mean_off = to_double(f, v); }},
  };
}

void apply(std::map<std::string, Setter> setters, const std::string& section, const std::string& key,
           const std::string& value) {
  const std::string field = section.empty() ? key : section + "." + key;
  auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError(field, "unknown key");
  it->second(field, value);
}

}  // namespace

Scenario default_scenario() {
  Scenario s;
  sim::StationConfig st;
  st.mcs_rate = 780e6;
  s.sim.stations.push_back(st);
  return s;
}

Scenario parse_scenario(std::istream& in) {
  Scenario s;
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  // Pending repeated section with its replication count.
  int count = 1;
  auto flush = [&]() {
    if (section == "station") {
      for (int i = 1; i < count; ++i) s.sim.stations.push_back(s.sim.stations.back());
    } else if (section == "contender") {
      for (int i = 1; i < count; ++i) s.sim.contenders.push_back(s.sim.contenders.back());
    }
    count = 1;
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "bad section header");
      flush();
      section = trim(line.substr(1, line.size() - 2));
      if (section == "station") s.sim.stations.emplace_back();
      else if (section == "contender") s.sim.contenders.emplace_back();
      else if (section != "ap" && section != "backhaul" && section != "controller" && section != "trace")
        throw ConfigError(section, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "count" && (section == "station" || section == "contender")) {
      count = static_cast<int>(to_int(section + ".count", value));
      if (count < 1) throw ConfigError(section + ".count", "must be >= 1");
      continue;
    }
    if (section.empty()) apply(top_setters(s), "", key, value);
    else if (section == "ap") apply(ap_setters(s.sim.ap), section, key, value);
    else if (section == "backhaul") apply(backhaul_setters(s.sim.backhaul), section, key, value);
    else if (section == "controller") apply(controller_setters(s.controller), section, key, value);
    else if (section == "trace") apply(trace_setters(s.trace), section, key, value);
    else if (section == "station") apply(station_setters(s.sim.stations.back()), section, key, value);
    else apply(contender_setters(s.sim.contenders.back()), section, key, value);
  }
  flush();
  return s;
}

Scenario parse_scenario_text(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

std::string print_scenario(const Scenario& s) {
  std::ostringstream o;
  o << "name = " << s.name << "\nversion = " << s.version << "\nduration = " << fmt(s.duration)
    << "\nwarmup = " << fmt(s.warmup) << "\nseeds = ";
  for (std::size_t i = 0; i < s.seeds.size(); ++i) o << (i ? ", " : "") << s.seeds[i];
  const auto& a = s.sim.ap;
  o << "\n\n[ap]\nn_max = " << a.n_max << "\nqueue_capacity = " << a.queue_capacity
    << "\nphy_overhead = " << fmt(a.phy_overhead) << "\nmpdu_overhead_bits = " << fmt(a.mpdu_overhead_bits)
    << "\nl3_header_bits = " << fmt(a.l3_header_bits) << "\ndifs = " << fmt(a.difs) << "\nsifs = " << fmt(a.sifs)
    << "\nslot_time = " << fmt(a.slot_time) << "\ncw_min = " << a.cw_min << "\ncw_max = " << a.cw_max
    << "\nper_packet_error_prob = " << fmt(a.per_packet_error_prob) << "\nretry_limit = " << a.retry_limit
    << "\nbeacon_pps = " << fmt(a.beacon_pps) << "\nbeacon_airtime = " << fmt(a.beacon_airtime)
    << "\nfeedback_airtime = " << fmt(a.feedback_airtime) << "\n";
  const auto& b = s.sim.backhaul;
  o << "\n[backhaul]\nenabled = " << (b.enabled ? "true" : "false") << "\nlink_rate = " << fmt(b.link_rate)
    << "\nqueue_len = " << b.queue_len << "\nframe_overhead_bits = " << fmt(b.frame_overhead_bits)
    << "\ncross_rate = " << fmt(b.cross_rate) << "\ncross_schedule = " << schedule_text(b.cross_schedule)
    << "\ncross_packet_len = " << fmt(b.cross_packet_len)
    << "\ncross_poisson = " << (b.cross_poisson ? "true" : "false") << "\n";
  const auto& c = s.controller;
  const auto& p = c.params;
  o << "\n[controller]\nenabled = " << (c.enabled ? "true" : "false") << "\nk0 = " << fmt(p.k0)
    << "\ndelta = " << fmt(p.delta) << "\nn_eps = " << fmt(p.n_eps) << "\nx_min = " << fmt(p.x_min)
    << "\nx_max = " << fmt(p.x_max) << "\nx_init = " << fmt(p.x_init)
    << "\nliteral_station_mean = " << (p.literal_station_mean ? "true" : "false")
    << "\nfeedback_delay = " << fmt(c.feedback_delay)
    << "\nfeedback_frames = " << (c.feedback_frames ? "true" : "false") << "\n";
  o << "\n[trace]\npackets = " << (s.trace.packets ? "true" : "false")
    << "\nframes = " << (s.trace.frames ? "true" : "false") << "\n";
  for (const auto& st : s.sim.stations) {
    o << "\n[station]\nbss = " << st.bss << "\nmcs_rate = " << fmt(st.mcs_rate)
      << "\nmcs_schedule = " << schedule_text(st.mcs_schedule) << "\npacket_len = " << fmt(st.packet_len)
      << "\nmode = " << (st.mode == sim::StationMode::Controlled ? "controlled" : "legacy")
      << "\nsend_rate = " << fmt(st.send_rate) << "\nrate_schedule = " << schedule_text(st.rate_schedule) << "\n";
  }
  for (const auto& ct : s.sim.contenders) {
    o << "\n[contender]\nframe_airtime = " << fmt(ct.frame_airtime) << "\nmean_on = " << fmt(ct.mean_on)
      << "\nmean_off = " << fmt(ct.mean_off) << "\n";
  }
  return o.str();
}

std::uint64_t scenario_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : print_scenario(s)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void set_field(Scenario& s, const std::string& path, const std::string& value) {
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    apply(top_setters(s), "", path, value);
    return;
  }
  std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  std::optional<std::size_t> index;
  if (const auto br = section.find('['); br != std::string::npos) {
    if (section.back() != ']') throw ConfigError(path, "bad index");
    index = static_cast<std::size_t>(to_int(path, section.substr(br + 1, section.size() - br - 2)));
    section = section.substr(0, br);
  }
  if (section == "ap") return apply(ap_setters(s.sim.ap), section, key, value);
  if (section == "backhaul") return apply(backhaul_setters(s.sim.backhaul), section, key, value);
  if (section == "controller") return apply(controller_setters(s.controller), section, key, value);
  if (section == "trace") return apply(trace_setters(s.trace), section, key, value);
  if (section == "station") {
    if (index) {
      if (*index >= s.sim.stations.size()) throw ConfigError(path, "no such station");
      return apply(station_setters(s.sim.stations[*index]), section, key, value);
    }
    if (s.sim.stations.empty()) throw ConfigError(path, "scenario has no stations");
    for (auto& st : s.sim.stations) apply(station_setters(st), section, key, value);
    return;
  }
  if (section == "contender") {
    if (index) {
      if (*index >= s.sim.contenders.size()) throw ConfigError(path, "no such contender");
      return apply(contender_setters(s.sim.contenders[*index]), section, key, value);
    }
    if (s.sim.contenders.empty()) throw ConfigError(path, "scenario has no contenders");
    for (auto& c : s.sim.contenders) apply(contender_setters(c), section, key, value);
    return;
  }
  throw ConfigError(path, "unknown section");
}

void validate(const Scenario& s) {
  if (s.seeds.empty()) throw ConfigError("seeds", "need at least one seed");
  if (!(s.warmup >= 0 && s.warmup < s.duration)) throw ConfigError("warmup", "must lie in [0, duration)");
  sim::validate(s.sim, s.duration);
  if (s.controller.enabled) {
    control::validate(s.controller.params, s.sim.ap.n_max);
    if (!(s.controller.feedback_delay >= 0 && s.controller.feedback_delay < s.controller.params.delta))
      throw ConfigError("controller.feedback_delay", "must lie in [0, delta)");
  }
}

}  // namespace aggrate::harness
