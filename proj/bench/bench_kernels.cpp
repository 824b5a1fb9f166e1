// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "aggrate/common/rng.hpp"
#include "aggrate/harness/run.hpp"
#include "aggrate/harness/scenario.hpp"
#include "aggrate/ml/kernel_ridge.hpp"
#include "aggrate/ml/logistic.hpp"

using namespace aggrate;

namespace {

ml::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  ml::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

template <ml::Matrix (*Gram)(const ml::Matrix&, const ml::Matrix&, double)>
void BM_Gram(benchmark::State& state) {
  const auto a = random_matrix(state.range(0), 5, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Gram(a, a, 0.1));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <double (*Loss)(const ml::Matrix&, const ml::Vector&, const ml::Vector&, double, double, ml::Vector*,
                         double*)>
void BM_LogisticLoss(benchmark::State& state) {
  const auto x = random_matrix(state.range(0), 21, 2);
  ml::Vector y(x.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = x(i, 0) > 0 ? 1.0 : 0.0;
  const ml::Vector w = ml::Vector::Constant(x.cols(), 0.1);
  ml::Vector g;
  double gb = 0;
  for (auto _ : state) benchmark::DoNotOptimize(Loss(x, y, w, 0.0, 1e-4, &g, &gb));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Sweep(benchmark::State& state) {
  auto s = harness::default_scenario();
  s.duration = 2.0;
  s.seeds = {1, 2};
  const std::vector<std::string> values{"50e6", "200e6", "400e6", "800e6"};
  for (auto _ : state) {
    auto rows = Parallel ? harness::sweep(s, "station.send_rate", values)
                         : harness::sweep_serial(s, "station.send_rate", values);
    benchmark::DoNotOptimize(rows);
  }
}

}  // namespace

BENCHMARK(BM_Gram<ml::gram_matrix_serial>)->Name("gram/serial")->Arg(500)->Arg(2000);
BENCHMARK(BM_Gram<ml::gram_matrix>)->Name("gram/omp")->Arg(500)->Arg(2000);
BENCHMARK(BM_LogisticLoss<ml::logistic_loss_serial>)->Name("logistic_loss/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_LogisticLoss<ml::logistic_loss>)->Name("logistic_loss/omp")->Arg(10000)->Arg(100000);
BENCHMARK(BM_Sweep<false>)->Name("sweep/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep<true>)->Name("sweep/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
