#pragma once

#include <optional>
#include <span>
#include <vector>

#include "aggrate/meter/meter.hpp"
#include "aggrate/sim/records.hpp"

namespace aggrate::control {

struct ControllerParams {
  double k0 = 1.0;       // Mb/s per packet of aggregation error
  double delta = 0.5;    // report interval, seconds
  double n_eps = 32.0;   // target aggregation
  int n = 1;             // stations sharing the WLAN; gain is k0 / n
  double x_min = 1e6;
  double x_max = 10e9;
  double x_init = 50e6;
  /// Drive the update with the mean N̄ over reporting stations instead of
  /// the N̄ of the fastest station.
  bool literal_station_mean = false;
};

void validate(const ControllerParams& p, int n_max);

double gain(const ControllerParams& p);  // bits/s per packet

/// x' = clamp(x − K·(N̄ − N_ε)); holds x when the report has no fresh frames.
double update_rate_single(double x, const meter::FeedbackReport& report, const ControllerParams& p);

struct RateVector {
  std::vector<double> x;
  int i_star = -1;
};

/// Updates the fastest station (highest R̄, lowest id on ties) by the single
/// station rule, then sets x_i = x_{i*}·R̄_i/R̄_{i*}. `reports[i]` is the
/// latest report of station i; stations without one keep their rate. All
/// rates are held when the fastest station has no measurement.
RateVector update_rates_multi(const RateVector& rates,
                              std::span<const std::optional<meter::FeedbackReport>> reports,
                              const ControllerParams& p);

struct ConvergenceMetrics {
  bool converged = false;
  double time_to_target = 0.0;  // seconds
  double std_after = 0.0;       // std of N̄ over the slots that follow
  std::size_t slot = 0;
};

/// Convergence = first slot from which N̄ stays within ±10% of N_ε for five
/// consecutive slots. Missing measurements count as outside the band.
ConvergenceMetrics convergence_metrics(std::span<const std::optional<double>> mean_agg,
                                       const ControllerParams& p);

/// Per-WLAN controller state, advanced once per report interval.
class RateController {
 public:
  RateController(ControllerParams params, int stations);

  /// Consumes the reports of one slot (any subset of stations) and returns
  /// the new rate vector. Appends one log row per station.
  const RateVector& tick(std::uint32_t slot, std::span<const meter::FeedbackReport> reports);

  const RateVector& rates() const { return rates_; }
  const ControllerParams& params() const { return params_; }
  const std::vector<sim::ControllerLogRow>& log() const { return log_; }

 private:
  ControllerParams params_;
  RateVector rates_;
  std::vector<std::optional<double>> last_mcs_;
  std::vector<sim::ControllerLogRow> log_;
};

}  // namespace aggrate::control
