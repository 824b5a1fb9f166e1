#pragma once

#include <cstdint>
#include <vector>

#include "aggrate/ml/logistic.hpp"

namespace aggrate::ml {

/// exp(-gamma·||a-b||²)
double rbf_kernel(const Vector& a, const Vector& b, double gamma);

/// Gram matrix K(i,j) = rbf(a_i, b_j). Rows of the output are filled in
/// parallel; each entry is computed independently so the result matches
/// gram_matrix_serial exactly.
Matrix gram_matrix(const Matrix& a, const Matrix& b, double gamma);
Matrix gram_matrix_serial(const Matrix& a, const Matrix& b, double gamma);

struct KernelRidgeModel {
  Matrix support;  // standardized training inputs
  Vector alpha;
  double bias = 0.0;  // mean of the training targets
  double gamma = 1.0;
  double lambda = 1e-3;
  Scaler scaler;

  double predict(const Vector& x) const;
  Vector predict(const Matrix& x) const;
};

struct KernelRidgeReport {
  double lambda_used = 0.0;
  int lambda_escalations = 0;  // times lambda was multiplied by 10
};

/// Solves (K + lambda·I)·alpha = y - mean(y) with a Cholesky factorization.
/// If the factorization fails, lambda is multiplied by 10 until it succeeds.
KernelRidgeModel train_kernel_ridge(const Matrix& x, const Vector& y, double gamma, double lambda,
                                    KernelRidgeReport* report = nullptr);

double rmse(const Vector& a, const Vector& b);

struct GridPoint {
  double gamma = 0.0;
  double lambda = 0.0;
  double cv_rmse = 0.0;
};

/// k-fold CV RMSE for every (gamma, lambda) pair; rows in gamma-major order.
std::vector<GridPoint> kernel_ridge_grid(const Matrix& x, const Vector& y, const std::vector<double>& gammas,
                                         const std::vector<double>& lambdas, int k, std::uint64_t seed);

}  // namespace aggrate::ml
