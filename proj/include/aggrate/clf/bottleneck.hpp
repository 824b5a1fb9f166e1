#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "aggrate/meter/meter.hpp"
#include "aggrate/ml/logistic.hpp"
#include "aggrate/ml/model_io.hpp"

namespace aggrate::clf {

/// Streaming [N_{i-n+1} .. N_i, L_i^p] features, one per frame. N_j is the
/// aggregation of frame j; L is the fraction of sequence numbers missing in
/// the window of the last p numbers ending at the highest one received.
class ClfFeatureBuilder {
 public:
  ClfFeatureBuilder(int n, int p);

  /// Returns a feature once n frames have been seen and the sequence space
  /// covers p numbers.
  std::optional<std::vector<double>> push(int agg, std::span<const std::uint64_t> received_seqs);
  /// Uses the frame's received count as its aggregation.
  std::optional<std::vector<double>> push(const meter::ObservedFrame& frame);

  double loss_fraction() const;
  int n() const { return n_; }
  int p() const { return p_; }

 private:
  int n_, p_;
  std::vector<int> aggs_;  // ring of the last n values
  std::size_t frames_ = 0;
  std::set<std::uint64_t> window_;
  std::optional<std::uint64_t> first_, max_;
};

struct ClfModel {
  int n = 5;
  int p = 100;
  ml::LogisticModel logit;

  double predict_proba(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }

  ml::ModelFile to_file() const;
  static ClfModel from_file(const ml::ModelFile& file);
};

ClfModel train_clf(const ml::Matrix& x, const ml::Vector& y, int n, int p, const ml::LogisticOptions& options = {});

/// Row indices giving equal class counts: the larger class is subsampled
/// without replacement (seeded); output is sorted.
std::vector<std::size_t> balanced_rows(const ml::Vector& y, std::uint64_t seed);

struct Transition {
  double t_us = 0.0;
  int from = 0;
  int to = 0;
};

/// Emits a transition when h consecutive labels disagree with the current
/// state, stamped with the time of the h-th label.
std::vector<Transition> detect_transitions(std::span<const double> t_us, std::span<const int> labels, int h,
                                           int initial = 0);

}  // namespace aggrate::clf
