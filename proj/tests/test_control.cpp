#include <cmath>
#include <optional>
#include <vector>

#include "aggrate/common/error.hpp"
#include "aggrate/common/rng.hpp"
#include "aggrate/control/controller.hpp"
#include "doctest.h"

using namespace aggrate;
using namespace aggrate::control;

namespace {

meter::FeedbackReport report(int station, double n_bar, double mcs, std::uint32_t frames = 10) {
  meter::FeedbackReport r;
  r.station = static_cast<std::uint16_t>(station);
  r.mean_agg = n_bar;
  r.mean_mcs = mcs;
  r.frame_count = frames;
  return r;
}

}  // namespace

TEST_CASE("single station update") {
  ControllerParams p;
  CHECK(update_rate_single(400e6, report(0, 40, 390e6), p) == doctest::Approx(392e6));
  CHECK(update_rate_single(400e6, report(0, 32, 390e6), p) == 400e6);
  p.n = 4;
  CHECK(update_rate_single(400e6, report(0, 40, 390e6), p) == doctest::Approx(398e6));
}

TEST_CASE("empty report holds the rate") {
  ControllerParams p;
  auto r = report(0, 40, 390e6, 0);
  CHECK(update_rate_single(123e6, r, p) == 123e6);
  r.frame_count = 5;
  r.mean_agg.reset();
  CHECK(update_rate_single(123e6, r, p) == 123e6);
}

TEST_CASE("sustained N_max drives the rate down every slot") {
  ControllerParams p;
  double x = 600e6;
  for (int k = 0; k < 10; ++k) {
    const double next = update_rate_single(x, report(0, 64, 780e6), p);
    CHECK(next < x);
    x = next;
  }
}

TEST_CASE("rate clamps") {
  ControllerParams p;
  CHECK(update_rate_single(2e6, report(0, 128, 390e6), p) == p.x_min);
  p.k0 = 1000;
  CHECK(update_rate_single(9.9e9, report(0, 1, 390e6), p) == p.x_max);
}

TEST_CASE("sign of the correction") {
  ControllerParams p;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double x = 10e6 + rng.uniform() * 900e6;
    const double n_bar = 1 + rng.uniform() * 127;
    const double next = update_rate_single(x, report(0, n_bar, 390e6), p);
    if (n_bar > p.n_eps) CHECK(next < x);
    if (n_bar < p.n_eps) CHECK(next > x);
  }
}

TEST_CASE("multi station allocation") {
  ControllerParams p;
  RateVector rv{{400e6, 50e6}, -1};
  std::vector<std::optional<meter::FeedbackReport>> reps{report(0, 32, 390e6), report(1, 20, 195e6)};
  const auto out = update_rates_multi(rv, reps, p);
  CHECK(out.i_star == 0);
  CHECK(out.x[0] == doctest::Approx(400e6));
  CHECK(out.x[1] == doctest::Approx(200e6));
}

TEST_CASE("equal MCS gives equal rates and ties pick the lowest id") {
  ControllerParams p;
  RateVector rv{{100e6, 300e6, 200e6}, -1};
  std::vector<std::optional<meter::FeedbackReport>> reps{report(0, 30, 390e6), report(1, 40, 390e6),
                                                         report(2, 20, 390e6)};
  const auto out = update_rates_multi(rv, reps, p);
  CHECK(out.i_star == 0);
  CHECK(out.x[0] == doctest::Approx(102e6));
  CHECK(out.x[1] == out.x[0]);
  CHECK(out.x[2] == out.x[0]);
}

TEST_CASE("allocation is scale free in the MCS rates") {
  ControllerParams p;
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    RateVector rv{{}, -1};
    std::vector<std::optional<meter::FeedbackReport>> a, b;
    for (int i = 0; i < 4; ++i) {
      rv.x.push_back(50e6 + rng.uniform() * 400e6);
      const double mcs = 50e6 + rng.uniform() * 800e6;
      const double n_bar = 1 + rng.uniform() * 63;
      a.push_back(report(i, n_bar, mcs));
      b.push_back(report(i, n_bar, 2 * mcs));
    }
    const auto ra = update_rates_multi(rv, a, p);
    const auto rb = update_rates_multi(rv, b, p);
    CHECK(ra.i_star == rb.i_star);
    for (std::size_t i = 0; i < 4; ++i) CHECK(ra.x[i] / ra.x[ra.i_star] == doctest::Approx(rb.x[i] / rb.x[rb.i_star]));
  }
}

TEST_CASE("fastest station without a measurement holds every rate") {
  ControllerParams p;
  RateVector rv{{100e6, 50e6}, 0};
  std::vector<std::optional<meter::FeedbackReport>> reps{report(0, 40, 390e6, 0), report(1, 40, 195e6)};
  const auto out = update_rates_multi(rv, reps, p);
  CHECK(out.x == rv.x);
  CHECK(out.i_star == 0);
}

TEST_CASE("fixed point when every report sits at the target") {
  ControllerParams p;
  RateController c(p, 3);
  std::vector<meter::FeedbackReport> reps{report(0, 32, 390e6), report(1, 32, 195e6), report(2, 32, 97.5e6)};
  const auto first = c.tick(0, reps);
  for (std::uint32_t k = 1; k < 20; ++k) {
    const auto& next = c.tick(k, reps);
    CHECK(next.i_star == first.i_star);
    CHECK(next.x == first.x);
  }
  CHECK(c.log().size() == 60);
}

TEST_CASE("literal station-mean switch") {
  ControllerParams p;
  RateVector rv{{400e6, 200e6}, -1};
  std::vector<std::optional<meter::FeedbackReport>> reps{report(0, 32, 390e6), report(1, 48, 195e6)};
  CHECK(update_rates_multi(rv, reps, p).x[0] == doctest::Approx(400e6));
  p.literal_station_mean = true;
  CHECK(update_rates_multi(rv, reps, p).x[0] == doctest::Approx(392e6));
}

TEST_CASE("convergence metrics") {
  ControllerParams p;
  std::vector<std::optional<double>> flat(30, 32.0);
  auto m = convergence_metrics(flat, p);
  CHECK(m.converged);
  CHECK(m.time_to_target == 0.0);
  CHECK(m.std_after == doctest::Approx(0.0));

  std::vector<std::optional<double>> ramp;
  for (int k = 0; k < 40; ++k) ramp.push_back(k < 10 ? 5.0 + k : 32.0 + (k % 2 ? 1.0 : -1.0));
  m = convergence_metrics(ramp, p);
  CHECK(m.converged);
  CHECK(m.slot == 10);
  CHECK(m.time_to_target == doctest::Approx(10 * p.delta));
  CHECK(m.std_after == doctest::Approx(std::sqrt(30.0 / 29.0)));  // sample std of 30 values at ±1

  std::vector<std::optional<double>> wild;
  for (int k = 0; k < 40; ++k) wild.push_back(k % 2 ? 64.0 : 2.0);
  m = convergence_metrics(wild, p);
  CHECK_FALSE(m.converged);
  CHECK(m.time_to_target == doctest::Approx(40 * p.delta));

  std::vector<std::optional<double>> gaps(30, 32.0);
  for (std::size_t k = 0; k < gaps.size(); k += 4) gaps[k].reset();
  CHECK_FALSE(convergence_metrics(gaps, p).converged);

  CHECK_THROWS(convergence_metrics(std::vector<std::optional<double>>(19, 32.0), p));
}

TEST_CASE("parameter validation") {
  ControllerParams p;
  CHECK_NOTHROW(validate(p, 64));
  auto bad = p;
  bad.k0 = 0;
  CHECK_THROWS_AS(validate(bad, 64), ConfigError);
  bad = p;
  bad.delta = -1;
  CHECK_THROWS_AS(validate(bad, 64), ConfigError);
  bad = p;
  bad.n_eps = 65;
  CHECK_THROWS_AS(validate(bad, 64), ConfigError);
  bad = p;
  bad.x_init = 0.5e6;
  CHECK_THROWS_AS(validate(bad, 64), ConfigError);
}
