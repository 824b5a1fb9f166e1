#include "aggrate/control/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aggrate/common/error.hpp"

namespace aggrate::control {

void validate(const ControllerParams& p, int n_max) {
  if (!(p.k0 > 0)) throw ConfigError("controller.k0", "must be positive");
  if (!(p.delta > 0)) throw ConfigError("controller.delta", "must be positive");
  if (!(p.n_eps >= 1 && p.n_eps <= n_max)) throw ConfigError("controller.n_eps", "must lie in [1, n_max]");
  if (p.n < 1) throw ConfigError("controller.n", "must be >= 1");
  if (!(p.x_min > 0 && p.x_max >= p.x_min)) throw ConfigError("controller.x_min", "need 0 < x_min <= x_max");
  if (!(p.x_init >= p.x_min && p.x_init <= p.x_max)) throw ConfigError("controller.x_init", "outside [x_min, x_max]");
}

double gain(const ControllerParams& p) { return p.k0 / p.n * 1e6; }

namespace {
double clamp_rate(double x, const ControllerParams& p) { return std::clamp(x, p.x_min, p.x_max); }

bool measured(const std::optional<meter::FeedbackReport>& r) {
  return r && r->frame_count > 0 && r->mean_agg.has_value();
}
}  // namespace

double update_rate_single(double x, const meter::FeedbackReport& report, const ControllerParams& p) {
  if (report.frame_count == 0 || !report.mean_agg) return x;
  return clamp_rate(x - gain(p) * (*report.mean_agg - p.n_eps), p);
}

RateVector update_rates_multi(const RateVector& rates,
                              std::span<const std::optional<meter::FeedbackReport>> reports,
                              const ControllerParams& p) {
  if (reports.size() != rates.x.size()) throw std::invalid_argument("update_rates_multi: size mismatch");
  RateVector out = rates;
  int star = -1;
  double best = 0.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (!r || !(r->mean_mcs > 0)) continue;
    if (r->mean_mcs > best) {
      best = r->mean_mcs;
      star = static_cast<int>(i);
    }
  }
  if (star < 0 || !measured(reports[static_cast<std::size_t>(star)])) return out;
  out.i_star = star;

  double n_bar = *reports[static_cast<std::size_t>(star)]->mean_agg;
  if (p.literal_station_mean) {
    double sum = 0.0;
    int k = 0;
    for (const auto& r : reports) {
      if (!measured(r)) continue;
      sum += *r->mean_agg;
      ++k;
    }
    n_bar = sum / k;
  }
  const auto s = static_cast<std::size_t>(star);
  const double x_star = clamp_rate(rates.x[s] - gain(p) * (n_bar - p.n_eps), p);
  out.x[s] = x_star;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (i == s || !reports[i] || !(reports[i]->mean_mcs > 0)) continue;
    out.x[i] = clamp_rate(x_star * reports[i]->mean_mcs / best, p);
  }
  return out;
}

ConvergenceMetrics convergence_metrics(std::span<const std::optional<double>> mean_agg,
                                       const ControllerParams& p) {
  constexpr std::size_t kRun = 5;
  if (mean_agg.size() < 20) throw std::invalid_argument("convergence_metrics: need at least 20 slots");
  auto inside = [&](std::size_t i) {
    return mean_agg[i] && std::abs(*mean_agg[i] - p.n_eps) <= 0.1 * p.n_eps;
  };
  auto stddev = [&](std::size_t from) {
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (std::size_t i = from; i < mean_agg.size(); ++i) {
      if (!mean_agg[i]) continue;
      sum += *mean_agg[i];
      sq += *mean_agg[i] * *mean_agg[i];
      ++n;
    }
    if (n < 2) return 0.0;
    const double m = sum / n;
    return std::sqrt(std::max(0.0, (sq - n * m * m) / (n - 1)));
  };

  ConvergenceMetrics m;
  std::size_t run = 0;
  for (std::size_t i = 0; i < mean_agg.size(); ++i) {
    run = inside(i) ? run + 1 : 0;
    if (run == kRun) {
      m.converged = true;
      m.slot = i + 1 - kRun;
      m.time_to_target = static_cast<double>(m.slot) * p.delta;
      m.std_after = stddev(m.slot);
      return m;
    }
  }
  m.slot = mean_agg.size();
  m.time_to_target = static_cast<double>(mean_agg.size()) * p.delta;
  m.std_after = stddev(mean_agg.size() / 2);
  return m;
}

RateController::RateController(ControllerParams params, int stations) : params_(params) {
  if (stations < 1) throw std::invalid_argument("RateController: need a station");
  rates_.x.assign(static_cast<std::size_t>(stations), params_.x_init);
  last_mcs_.resize(static_cast<std::size_t>(stations));
}

const RateVector& RateController::tick(std::uint32_t slot, std::span<const meter::FeedbackReport> reports) {
  const auto n = rates_.x.size();
  std::vector<std::optional<meter::FeedbackReport>> latest(n);
  for (const auto& r : reports) {
    if (r.station >= n) throw std::invalid_argument("RateController: report for unknown station");
    latest[r.station] = r;
  }
  // Stations that sent nothing useful keep their last known R̄ so that the
  // proportional allocation still covers them.
  for (std::size_t i = 0; i < n; ++i) {
    if (latest[i] && latest[i]->mean_mcs > 0) {
      last_mcs_[i] = latest[i]->mean_mcs;
    } else if (last_mcs_[i]) {
      if (!latest[i]) {
        latest[i] = meter::FeedbackReport{};
        latest[i]->station = static_cast<std::uint16_t>(i);
      }
      latest[i]->mean_mcs = *last_mcs_[i];
    }
  }
  const RateVector before = rates_;
  rates_ = update_rates_multi(rates_, latest, params_);
  for (std::size_t i = 0; i < n; ++i) {
    sim::ControllerLogRow row;
    row.slot = slot;
    row.station = static_cast<int>(i);
    if (latest[i] && latest[i]->frame_count > 0) row.mean_agg = latest[i]->mean_agg;
    row.mean_mcs = latest[i] ? latest[i]->mean_mcs : 0.0;
    row.x_before = before.x[i];
    row.x_after = rates_.x[i];
    row.i_star = rates_.i_star;
    log_.push_back(row);
  }
  return rates_;
}

}  // namespace aggrate::control
