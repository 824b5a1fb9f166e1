#include "aggrate/ml/kernel_ridge.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace aggrate::ml {

double rbf_kernel(const Vector& a, const Vector& b, double gamma) { return std::exp(-gamma * (a - b).squaredNorm()); }

namespace {
inline double entry(const Matrix& a, const Matrix& b, Eigen::Index i, Eigen::Index j, double gamma) {
  return std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
}
void check_cols(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("gram_matrix: column mismatch");
}
}  // namespace

Matrix gram_matrix(const Matrix& a, const Matrix& b, double gamma) {
  check_cols(a, b);
  Matrix k(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = entry(a, b, i, j, gamma);
  }
  return k;
}

Matrix gram_matrix_serial(const Matrix& a, const Matrix& b, double gamma) {
  check_cols(a, b);
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = entry(a, b, i, j, gamma);
  }
  return k;
}

double KernelRidgeModel::predict(const Vector& x) const {
  if (x.size() != support.cols()) throw std::invalid_argument("kernel ridge: feature dimension mismatch");
  const Vector xs = scaler.transform_row(x);
  double s = bias;
  for (Eigen::Index j = 0; j < support.rows(); ++j) {
    s += alpha[j] * std::exp(-gamma * (support.row(j).transpose() - xs).squaredNorm());
  }
  return s;
}

Vector KernelRidgeModel::predict(const Matrix& x) const {
  if (x.cols() != support.cols()) throw std::invalid_argument("kernel ridge: feature dimension mismatch");
  const Matrix k = gram_matrix(scaler.transform(x), support, gamma);
  return (k * alpha).array() + bias;
}

KernelRidgeModel train_kernel_ridge(const Matrix& x, const Vector& y, double gamma, double lambda,
                                    KernelRidgeReport* report) {
  if (x.rows() != y.size() || x.rows() == 0) throw std::invalid_argument("train_kernel_ridge: dimension mismatch");
  if (!(gamma >= 0) || !(lambda > 0)) throw std::invalid_argument("train_kernel_ridge: need gamma >= 0, lambda > 0");
  KernelRidgeModel m;
  m.scaler = Scaler::fit(x);
  m.support = m.scaler.transform(x);
  m.gamma = gamma;
  m.bias = y.mean();
  const Vector centered = y.array() - m.bias;
  const Matrix k = gram_matrix(m.support, m.support, gamma);
  int escalations = 0;
  for (;;) {
    Matrix a = k;
    a.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success) {
      m.alpha = llt.solve(centered);
      if (m.alpha.allFinite()) break;
    }
    if (++escalations > 30) throw std::runtime_error("train_kernel_ridge: system stays singular");
    lambda *= 10;
  }
  m.lambda = lambda;
  if (report) {
    report->lambda_used = lambda;
    report->lambda_escalations = escalations;
  }
  return m;
}

double rmse(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() == 0) throw std::invalid_argument("rmse: length mismatch");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

std::vector<GridPoint> kernel_ridge_grid(const Matrix& x, const Vector& y, const std::vector<double>& gammas,
                                         const std::vector<double>& lambdas, int k, std::uint64_t seed) {
  const auto folds = kfold_indices(static_cast<std::size_t>(x.rows()), k, seed);
  std::vector<GridPoint> out;
  for (double g : gammas) {
    for (double l : lambdas) {
      double ss = 0;
      std::size_t n = 0;
      for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<std::size_t> train;
        for (std::size_t h = 0; h < folds.size(); ++h) {
          if (h != f) train.insert(train.end(), folds[h].begin(), folds[h].end());
        }
        const auto model = train_kernel_ridge(take_rows(x, train), take_rows(y, train), g, l);
        const Vector pred = model.predict(take_rows(x, folds[f]));
        ss += (pred - take_rows(y, folds[f])).squaredNorm();
        n += folds[f].size();
      }
      out.push_back({g, l, std::sqrt(ss / static_cast<double>(n))});
    }
  }
  return out;
}

}  // namespace aggrate::ml
