#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "aggrate/clf/bottleneck.hpp"
#include "aggrate/clf/corpus.hpp"
#include "aggrate/tsml/boundary.hpp"
#include "aggrate/tsml/corpus.hpp"

namespace aggrate::harness {

/// Load levels of the single-station noise corpus (NSS2, 866.7 Mb/s).
enum class LoadRegime { Low, Mid, High, Saturated, Between };

/// low 50-250, mid 300-500, high 550-700, saturated >= 750 Mb/s.
LoadRegime load_regime(double rate_bps);
std::string to_string(LoadRegime r);

struct TsCorpusSpec {
  tsml::TsCorpusConfig config;
  std::vector<double> rates;
  std::vector<std::uint64_t> seeds;
};

/// 50..800 Mb/s in 50 Mb/s steps, seeds {1, 2}, 1.2 s per run.
TsCorpusSpec default_boundary_corpus();

/// Rate-major, seed-minor. Runs are simulated in parallel.
std::vector<tsml::TsRun> simulate_ts_runs(const TsCorpusSpec& spec);

/// `rows_per_run` rows drawn uniformly (with replacement) from every run so
/// each load level carries equal weight.
tsml::BoundaryFeatures boundary_training_set(std::span<const tsml::TsRun> runs, int m, bool use_sigma,
                                             std::size_t rows_per_run = 4000);

struct BoundaryEval {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> truth;  // packets with an estimate only
  std::vector<int> pred;
  double f1 = 0.0;
};

BoundaryEval evaluate_boundary(const tsml::BoundaryModel& model, const tsml::TsRun& run);

/// F1 over the concatenated packets of every evaluation in `regime`; NaN
/// when none falls in it.
double pooled_f1(std::span<const BoundaryEval> evals, LoadRegime regime);

struct SlotRows {
  ml::Matrix x;
  ml::Vector y;    // true slot mean
  ml::Vector raw;  // uncorrected estimate
  std::vector<double> rate;
};

/// Slot features of every run from `boundary`'s labels. Truth comes from MAC
/// completions, or from the kernel time of each frame's first packet when
/// `kernel_truth` is set (corpus files carry no MAC times).
SlotRows slot_rows(std::span<const tsml::TsRun> runs, const tsml::BoundaryModel& boundary, int d, int n_max,
                   bool kernel_truth = false);

SlotRows filter_regime(const SlotRows& rows, LoadRegime regime);

struct RbfTraining {
  tsml::RbfCorrector model;
  std::vector<ml::GridPoint> grid;
  ml::GridPoint best;
};

/// Picks (gamma, lambda) by k-fold CV RMSE, then fits on all rows.
RbfTraining train_rbf_corrector(const SlotRows& rows, int d, int n_max, const std::vector<double>& gammas,
                                const std::vector<double>& lambdas, int folds, std::uint64_t seed);

struct RmsePair {
  double raw = 0.0;
  double corrected = 0.0;
  std::size_t n = 0;
};

RmsePair slot_rmse(const SlotRows& rows, const tsml::RbfCorrector& model);

/// Traces in scenario-major, seed-minor order, simulated in parallel.
std::vector<clf::ClfTrace> simulate_clf_traces(const clf::ClfCorpusConfig& config,
                                               const std::vector<clf::ClfScenario>& scenarios,
                                               const std::vector<std::uint64_t>& seeds);

clf::ClfData clf_dataset(std::span<const clf::ClfTrace> traces, int n, int p);

/// Balanced subsample of `data`, then logistic fit.
clf::ClfModel train_clf_balanced(const clf::ClfData& data, int n, int p, std::uint64_t seed,
                                 const ml::LogisticOptions& options = {});

double clf_f1(const clf::ClfModel& model, const clf::ClfData& data);

struct EvalRow {
  std::string model;
  std::string corpus;  // file name, or "*" for pooled rows
  std::string level;
  std::size_t count = 0;  // packets, frames or slots scored
  double f1 = std::numeric_limits<double>::quiet_NaN();
  double rmse_raw = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
};

/// Scores every model on every corpus of its kind. Boundary models and
/// classifiers get F1 per file plus pooled F1 per level; an RBF corrector is
/// fed by the first boundary model given and reports slot RMSE with and
/// without correction. Throws when a corpus matches no model, a model has no
/// corpus, or a classifier's width disagrees with the corpus.
std::vector<EvalRow> eval_models(const std::vector<std::string>& model_paths,
                                 const std::vector<std::string>& corpus_paths);

std::string eval_csv(const std::vector<EvalRow>& rows);

}  // namespace aggrate::harness
