#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggrate/sim/simulator.hpp"

namespace aggrate::harness {

/// (Σx)² / (n·Σx²). Throws on empty, negative or all-zero input.
double jain_index(std::span<const double> values);

struct MetricSummary {
  std::string scenario;
  std::uint64_t hash = 0;
  std::uint64_t seed = 0;
  double window = 0.0;  // seconds summarized

  double goodput = 0.0;  // bits/s, all stations
  double mean_delay = 0.0;
  double p50_delay = 0.0;
  double p95_delay = 0.0;
  double p99_delay = 0.0;
  double mean_agg = 0.0;
  double jain = 1.0;  // over per-station goodput
  double theory_goodput = 0.0;

  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t drop_ap = 0;
  std::uint64_t drop_backhaul = 0;
  std::uint64_t drop_retry = 0;

  std::vector<double> station_goodput;
  std::vector<double> station_delay;
  std::vector<double> station_agg;
  std::vector<double> station_airtime;  // payload airtime share of the window

  // Closed loop only.
  bool converged = false;
  double time_to_target = std::numeric_limits<double>::quiet_NaN();
  double agg_std = std::numeric_limits<double>::quiet_NaN();
  double controlled_mean_agg = std::numeric_limits<double>::quiet_NaN();

  // Model evaluation only.
  double f1 = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
};

/// Summary of stations over [t0, t1).
MetricSummary summarize_stats(const sim::SimStats& stats, double t0, double t1);

/// Header and row for the tidy summary CSV.
std::string summary_csv_header();
std::string summary_csv_row(const MetricSummary& m, const std::string& axis_value = "");

}  // namespace aggrate::harness
