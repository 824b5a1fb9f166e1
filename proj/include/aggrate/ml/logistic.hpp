#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace aggrate::ml {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Per-column standardization fitted on training data.
struct Scaler {
  Vector mean;
  Vector scale;

  static Scaler fit(const Matrix& x);
  Matrix transform(const Matrix& x) const;
  Vector transform_row(const Vector& row) const;
  bool empty() const { return mean.size() == 0; }
};

struct LogisticModel {
  double bias = 0.0;
  Vector weights;  // in standardized feature space
  Scaler scaler;

  /// P(y=1 | x) for a raw (unscaled) feature vector.
  double predict_proba(const Vector& x) const;
  Vector predict_proba(const Matrix& x) const;
  int predict(const Vector& x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }
};

double sigmoid(double z);

/// Mean log loss plus (l2/2)·||w||² (bias unpenalized). Fills the gradient
/// when the pointers are non-null. Rows are processed in fixed-size chunks
/// whose partial sums are combined in chunk order, so the result does not
/// depend on the thread count.
double logistic_loss(const Matrix& x, const Vector& y, const Vector& w, double b, double l2,
                     Vector* grad_w = nullptr, double* grad_b = nullptr);

/// Single-threaded reference of logistic_loss.
double logistic_loss_serial(const Matrix& x, const Vector& y, const Vector& w, double b, double l2,
                            Vector* grad_w = nullptr, double* grad_b = nullptr);

struct LogisticOptions {
  double l2 = 1e-4;
  int max_iter = 100;
  double tol = 1e-9;  // on the gradient infinity norm
};

struct TrainReport {
  int iterations = 0;
  double final_loss = 0.0;
  double grad_norm = 0.0;
};

/// Newton iterations with backtracking on the regularized loss. Features
/// are standardized first; the scaler is stored with the model. Throws when
/// y holds a single class.
LogisticModel train_logistic(const Matrix& x, const Vector& y, const LogisticOptions& options = {},
                             TrainReport* report = nullptr);

/// F1 of the positive class.
double f1_score(const std::vector<int>& truth, const std::vector<int>& predicted);

struct CvResult {
  std::vector<double> fold_f1;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Contiguous-block k-fold split of the rows after a seeded shuffle.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k, std::uint64_t seed);

CvResult cross_validate_logistic(const Matrix& x, const Vector& y, int k, std::uint64_t seed,
                                 const LogisticOptions& options = {});

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows);
Vector take_rows(const Vector& y, const std::vector<std::size_t>& rows);

}  // namespace aggrate::ml
