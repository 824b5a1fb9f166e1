#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aggrate/control/controller.hpp"
#include "aggrate/sim/config.hpp"
#include "aggrate/sim/simulator.hpp"

namespace aggrate::harness {

struct ControllerSection {
  bool enabled = false;
  control::ControllerParams params;
  double feedback_delay = 0.002;  // report transit time, seconds
  bool feedback_frames = true;    // reports consume airtime
};

struct Scenario {
  std::string name = "default";
  int version = 1;
  double duration = 60.0;
  double warmup = 0.0;  // excluded from summary metrics
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  sim::SimConfig sim;
  ControllerSection controller;
  sim::TraceOptions trace{false, false};
};

/// Line-based `key = value` text with `[section]` headers. `[station]` and
/// `[contender]` sections may repeat; `count = n` replicates a section.
Scenario parse_scenario(std::istream& in);
Scenario parse_scenario_text(const std::string& text);

/// Canonical text form; parse_scenario(print_scenario(s)) reproduces s.
std::string print_scenario(const Scenario& s);

/// FNV-1a over the canonical text.
std::uint64_t scenario_hash(const Scenario& s);
std::string hash_hex(std::uint64_t h);

/// Sets a field by dotted path: `duration`, `ap.n_max`, `controller.k0`,
/// `station.send_rate` (every station) or `station[2].mcs_rate`.
void set_field(Scenario& s, const std::string& path, const std::string& value);

/// Throws ConfigError on the first invalid field.
void validate(const Scenario& s);

Scenario default_scenario();

}  // namespace aggrate::harness
