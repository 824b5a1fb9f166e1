#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aggrate/harness/metrics.hpp"
#include "aggrate/harness/scenario.hpp"
#include "aggrate/meter/meter.hpp"

namespace aggrate::harness {

struct RunResult {
  sim::Trace trace;
  sim::SimStats stats;
  MetricSummary summary;
  std::vector<std::vector<meter::FeedbackReport>> reports;  // per station, per slot
  /// N̄ per slot of the reference station (fastest controlled station of the
  /// first controlled BSS); drives the convergence metrics.
  std::vector<std::optional<double>> control_series;
  std::vector<double> rate_series;  // its send rate after each tick
};

/// Theoretical goodput bound for a scenario: n_max aggregation at the fastest
/// station's rate, with its beacons and feedback load.
double scenario_theory_goodput(const Scenario& s);

/// Runs one seed. With the controller enabled, every delta the per-station
/// meters emit a report, feedback frames are queued on the channel and the
/// controller acts feedback_delay later.
RunResult run_closed_loop(const Scenario& s, std::uint64_t seed);

struct SweepRow {
  std::string axis_value;
  std::uint64_t seed = 0;
  MetricSummary summary;
};

/// One row per (value, seed) in axis order. Points run in parallel; the
/// table is identical to sweep_serial.
std::vector<SweepRow> sweep(const Scenario& base, const std::string& axis,
                            const std::vector<std::string>& values);
std::vector<SweepRow> sweep_serial(const Scenario& base, const std::string& axis,
                                   const std::vector<std::string>& values);

}  // namespace aggrate::harness
