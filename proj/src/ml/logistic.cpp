#include "aggrate/ml/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "aggrate/common/rng.hpp"

namespace aggrate::ml {

namespace {
constexpr Eigen::Index kChunk = 2048;

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Partial {
  double loss = 0.0;
  Vector gw;
  double gb = 0.0;
};

void accumulate_rows(const Matrix& x, const Vector& y, const Vector& w, double b, Eigen::Index lo,
                     Eigen::Index hi, bool want_grad, Partial& p) {
  p.loss = 0.0;
  p.gb = 0.0;
  if (want_grad) p.gw = Vector::Zero(w.size());
  for (Eigen::Index i = lo; i < hi; ++i) {
    const double z = x.row(i).dot(w) + b;
    p.loss += softplus(z) - y[i] * z;
    if (want_grad) {
      const double r = sigmoid(z) - y[i];
      p.gw.noalias() += r * x.row(i).transpose();
      p.gb += r;
    }
  }
}

double finish(const Vector& w, double l2, Eigen::Index n, double loss, Vector* grad_w, double* grad_b,
              const Vector& gw, double gb) {
  const double inv = 1.0 / static_cast<double>(n);
  if (grad_w) *grad_w = gw * inv + l2 * w;
  if (grad_b) *grad_b = gb * inv;
  return loss * inv + 0.5 * l2 * w.squaredNorm();
}

void check_shapes(const Matrix& x, const Vector& y, const Vector& w) {
  if (x.rows() != y.size() || x.cols() != w.size() || x.rows() == 0)
    throw std::invalid_argument("logistic_loss: dimension mismatch");
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Scaler Scaler::fit(const Matrix& x) {
  Scaler s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale = Vector::Ones(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean[j]).square().sum() / std::max(1.0, n);
    const double sd = std::sqrt(var);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Scaler::transform(const Matrix& x) const {
  if (empty()) return x;
  Matrix out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i) = ((out.row(i).transpose() - mean).array() / scale.array()).transpose();
  }
  return out;
}

Vector Scaler::transform_row(const Vector& row) const {
  if (empty()) return row;
  return (row - mean).array() / scale.array();
}

double LogisticModel::predict_proba(const Vector& x) const {
  if (x.size() != weights.size()) throw std::invalid_argument("logistic model: feature dimension mismatch");
  return sigmoid(scaler.transform_row(x).dot(weights) + bias);
}

Vector LogisticModel::predict_proba(const Matrix& x) const {
  if (x.cols() != weights.size()) throw std::invalid_argument("logistic model: feature dimension mismatch");
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict_proba(Vector(x.row(i).transpose()));
  return out;
}

double logistic_loss(const Matrix& x, const Vector& y, const Vector& w, double b, double l2, Vector* grad_w,
                     double* grad_b) {
  check_shapes(x, y, w);
  const Eigen::Index n = x.rows();
  const Eigen::Index chunks = (n + kChunk - 1) / kChunk;
  const bool want = grad_w || grad_b;
  std::vector<Partial> parts(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    accumulate_rows(x, y, w, b, c * kChunk, std::min(n, (c + 1) * kChunk), want, parts[static_cast<std::size_t>(c)]);
  }
  double loss = 0.0, gb = 0.0;
  Vector gw = Vector::Zero(w.size());
  for (const auto& p : parts) {
    loss += p.loss;
    if (want) {
      gw += p.gw;
      gb += p.gb;
    }
  }
  return finish(w, l2, n, loss, grad_w, grad_b, gw, gb);
}

double logistic_loss_serial(const Matrix& x, const Vector& y, const Vector& w, double b, double l2,
                            Vector* grad_w, double* grad_b) {
  check_shapes(x, y, w);
  const Eigen::Index n = x.rows();
  const bool want = grad_w || grad_b;
  double loss = 0.0, gb = 0.0;
  Vector gw = Vector::Zero(w.size());
  Partial p;
  for (Eigen::Index lo = 0; lo < n; lo += kChunk) {
    accumulate_rows(x, y, w, b, lo, std::min(n, lo + kChunk), want, p);
    loss += p.loss;
    if (want) {
      gw += p.gw;
      gb += p.gb;
    }
  }
  return finish(w, l2, n, loss, grad_w, grad_b, gw, gb);
}

namespace {

// Hessian of the regularized loss over [w; b], chunked like the loss.
Matrix hessian(const Matrix& xs, const Vector& w, double b, double l2) {
  const Eigen::Index n = xs.rows(), d = xs.cols();
  const Eigen::Index chunks = (n + kChunk - 1) / kChunk;
  std::vector<Matrix> parts(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    Matrix h = Matrix::Zero(d + 1, d + 1);
    Vector row(d + 1);
    for (Eigen::Index i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      row.head(d) = xs.row(i).transpose();
      row[d] = 1.0;
      const double p = sigmoid(xs.row(i).dot(w) + b);
      h.selfadjointView<Eigen::Lower>().rankUpdate(row, p * (1 - p));
    }
    parts[static_cast<std::size_t>(c)] = std::move(h);
  }
  Matrix h = Matrix::Zero(d + 1, d + 1);
  for (const auto& p : parts) h += p;
  h = h.selfadjointView<Eigen::Lower>();
  h /= static_cast<double>(n);
  for (Eigen::Index j = 0; j < d; ++j) h(j, j) += l2;
  h(d, d) += 1e-12;
  return h;
}

}  // namespace

LogisticModel train_logistic(const Matrix& x, const Vector& y, const LogisticOptions& options, TrainReport* report) {
  if (x.rows() != y.size() || x.rows() == 0) throw std::invalid_argument("train_logistic: dimension mismatch");
  const double pos = y.sum();
  if (pos <= 0 || pos >= static_cast<double>(y.size())) throw std::invalid_argument("train_logistic: need both classes");
  LogisticModel m;
  m.scaler = Scaler::fit(x);
  const Matrix xs = m.scaler.transform(x);
  const Eigen::Index d = xs.cols();
  Vector w = Vector::Zero(d);
  const double prior = pos / static_cast<double>(y.size());
  double b = std::log(prior / (1 - prior));

  Vector gw;
  double gb = 0;
  double loss = logistic_loss(xs, y, w, b, options.l2, &gw, &gb);
  int it = 0;
  for (; it < options.max_iter; ++it) {
    const double gnorm = std::max(gw.cwiseAbs().maxCoeff(), std::abs(gb));
    if (gnorm < options.tol) break;
    const Matrix h = hessian(xs, w, b, options.l2);
    Vector g(d + 1);
    g.head(d) = gw;
    g[d] = gb;
    Vector step = h.ldlt().solve(-g);
    if (!step.allFinite()) step = -g;
    double t = 1.0;
    const double slope = g.dot(step);
    bool moved = false;
    for (int k = 0; k < 40; ++k) {
      const Vector w2 = w + t * step.head(d);
      const double b2 = b + t * step[d];
      Vector gw2;
      double gb2 = 0;
      const double l2loss = logistic_loss(xs, y, w2, b2, options.l2, &gw2, &gb2);
      if (l2loss <= loss + 1e-4 * t * slope) {
        w = w2;
        b = b2;
        gw = gw2;
        gb = gb2;
        moved = loss - l2loss > 0 || t == 1.0;
        loss = l2loss;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  m.weights = w;
  m.bias = b;
  if (report) {
    report->iterations = it;
    report->final_loss = loss;
    report->grad_norm = std::max(gw.cwiseAbs().maxCoeff(), std::abs(gb));
  }
  return m;
}

double f1_score(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("f1_score: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 1 && truth[i] == 1) ++tp;
    else if (predicted[i] == 1) ++fp;
    else if (truth[i] == 1) ++fn;
  }
  if (tp == 0) return (fp == 0 && fn == 0) ? 1.0 : 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > n) throw std::invalid_argument("kfold_indices: need 2 <= k <= n");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::size_t lo = n * f / folds.size(), hi = n * (f + 1) / folds.size();
    folds[f].assign(idx.begin() + static_cast<long>(lo), idx.begin() + static_cast<long>(hi));
    std::sort(folds[f].begin(), folds[f].end());
  }
  return folds;
}

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Vector take_rows(const Vector& y, const std::vector<std::size_t>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(rows[i])];
  return out;
}

CvResult cross_validate_logistic(const Matrix& x, const Vector& y, int k, std::uint64_t seed,
                                 const LogisticOptions& options) {
  const auto folds = kfold_indices(static_cast<std::size_t>(x.rows()), k, seed);
  CvResult r;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train.begin(), train.end());
    const auto model = train_logistic(take_rows(x, train), take_rows(y, train), options);
    const auto xt = take_rows(x, folds[f]);
    const auto yt = take_rows(y, folds[f]);
    const auto p = model.predict_proba(xt);
    std::vector<int> truth(static_cast<std::size_t>(yt.size())), pred(truth.size());
    for (Eigen::Index i = 0; i < yt.size(); ++i) {
      truth[static_cast<std::size_t>(i)] = yt[i] > 0.5 ? 1 : 0;
      pred[static_cast<std::size_t>(i)] = p[i] >= 0.5 ? 1 : 0;
    }
    r.fold_f1.push_back(f1_score(truth, pred));
  }
  const double n = static_cast<double>(r.fold_f1.size());
  r.mean = std::accumulate(r.fold_f1.begin(), r.fold_f1.end(), 0.0) / n;
  double ss = 0;
  for (double v : r.fold_f1) ss += (v - r.mean) * (v - r.mean);
  r.stddev = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  return r;
}

}  // namespace aggrate::ml
