#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aggrate/ml/kernel_ridge.hpp"
#include "aggrate/ml/logistic.hpp"
#include "aggrate/ml/model_io.hpp"

namespace aggrate::tsml {

struct BoundaryFeatures {
  ml::Matrix x;  // one row per packet i >= m: [t_{i-m+1} .. t_i (, sigma)]
  ml::Vector y;  // label of packet i (empty when no labels were given)
  std::vector<std::size_t> packet;  // packet index of each row
};

/// Inter-arrival features from kernel timestamps (µs). Row for packet i
/// holds the m gaps ending at i plus their population standard deviation.
/// `labels` may be empty; otherwise it has one entry per timestamp.
BoundaryFeatures build_boundary_features(std::span<const double> t_us, std::span<const int> labels, int m,
                                         bool use_sigma);

/// Logistic frame-boundary estimator. m=1 without sigma is the
/// inter-arrival threshold baseline.
struct BoundaryModel {
  int m = 20;
  bool uses_sigma = true;
  ml::LogisticModel logit;

  double predict_proba(std::span<const double> features) const;
  /// Label for every packet; packets before index m get -1 (no estimate).
  std::vector<int> predict_labels(std::span<const double> t_us) const;
  /// Raw inter-arrival threshold (µs) equivalent to an m=1, no-sigma model.
  double threshold_us() const;

  ml::ModelFile to_file() const;
  static BoundaryModel from_file(const ml::ModelFile& file);
};

BoundaryModel train_boundary(const BoundaryFeatures& data, int m, bool use_sigma,
                             const ml::LogisticOptions& options = {});

struct AggEstimate {
  std::size_t first_packet = 0;
  int n = 0;
};

/// Frame sizes between successive 1-labels, capped at n_max (the remainder
/// starts a new frame). Packets before the first 1 and the trailing open
/// frame are dropped. Labels of -1 count as 0.
std::vector<AggEstimate> labels_to_agg_frames(std::span<const int> labels, int n_max);
std::vector<int> labels_to_agg(std::span<const int> labels, int n_max);

struct SlotStat {
  long slot = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  int count = 0;
};

/// Per-slot mean, std and count of `values` assigned by `t_us`. Empty slots
/// are skipped; output is in slot order.
std::vector<SlotStat> slot_stats(std::span<const double> t_us, std::span<const double> values, double slot_s = 0.1);

/// RBF slot corrector: kernel ridge regression on
/// [mu_{j-d+1} .. mu_j, sigma_j, count_j] predicting the true slot mean.
struct SlotFeatures {
  ml::Matrix x;
  ml::Vector y;  // true slot mean (empty when truth is not given)
  std::vector<long> slot;
  ml::Vector raw;  // mu_j, the uncorrected estimate
};

/// Rows exist only for slots with d consecutive predicted slots ending at j
/// (and a truth entry for j, when `truth` is non-empty).
SlotFeatures build_slot_features(std::span<const SlotStat> predicted, std::span<const SlotStat> truth, int d);

struct RbfCorrector {
  int d = 5;
  int n_max = 128;
  ml::KernelRidgeModel krr;

  double predict(std::span<const double> features) const;
  ml::ModelFile to_file() const;
  static RbfCorrector from_file(const ml::ModelFile& file);
};

}  // namespace aggrate::tsml
