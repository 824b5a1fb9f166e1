#include <cmath>
#include <sstream>
#include <vector>

#include "aggrate/common/rng.hpp"
#include "aggrate/ml/kernel_ridge.hpp"
#include "aggrate/ml/logistic.hpp"
#include "aggrate/ml/model_io.hpp"
#include "doctest.h"

using namespace aggrate;
using namespace aggrate::ml;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = scale * rng.normal();
  return x;
}

Vector random_labels(Rng& rng, Eigen::Index n) {
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return y;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST_CASE("sigmoid and degenerate models") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(40.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) <= 1.0);
  LogisticModel m;
  m.weights = Vector::Zero(3);
  Vector x(3);
  x << 5, -2, 100;
  CHECK(m.predict_proba(x) == 0.5);
  m.bias = 60;
  CHECK(m.predict_proba(x) == doctest::Approx(1.0));
  CHECK_THROWS(m.predict_proba(Vector(Vector::Zero(2))));
}

TEST_CASE("logistic gradient matches central differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(5 + rng.below(30));
    const auto d = static_cast<Eigen::Index>(1 + rng.below(6));
    const Matrix x = random_matrix(rng, n, d);
    const Vector y = random_labels(rng, n);
    Vector w(d);
    for (auto& v : w) v = rng.normal();
    const double b = rng.normal();
    const double l2 = rng.uniform() * 0.1;
    Vector g;
    double gb = 0;
    logistic_loss(x, y, w, b, l2, &g, &gb);
    const double h = 1e-5;
    for (Eigen::Index j = 0; j < d; ++j) {
      Vector wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (logistic_loss(x, y, wp, b, l2) - logistic_loss(x, y, wm, b, l2)) / (2 * h);
      CHECK(rel_err(g[j], fd) < 1e-6);
    }
    const double fd_b = (logistic_loss(x, y, w, b + h, l2) - logistic_loss(x, y, w, b - h, l2)) / (2 * h);
    CHECK(rel_err(gb, fd_b) < 1e-6);
  }
}

TEST_CASE("parallel loss equals the serial reference") {
  Rng rng(7);
  const Matrix x = random_matrix(rng, 20000, 8);
  const Vector y = random_labels(rng, 20000);
  Vector w(8);
  for (auto& v : w) v = rng.normal();
  Vector g1, g2;
  double b1 = 0, b2 = 0;
  const double l1 = logistic_loss(x, y, w, 0.3, 1e-3, &g1, &b1);
  const double l2 = logistic_loss_serial(x, y, w, 0.3, 1e-3, &g2, &b2);
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
  CHECK((g1 - g2).norm() <= 1e-12 * (1 + g2.norm()));
  CHECK(b1 == doctest::Approx(b2).epsilon(1e-12));
}

TEST_CASE("separable data trains to F1 = 1") {
  Rng rng(3);
  Matrix x(200, 2);
  Vector y(200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const bool pos = i % 2;
    x(i, 0) = (pos ? 3.0 : -3.0) + rng.uniform();
    x(i, 1) = rng.normal();
    y[i] = pos;
  }
  TrainReport rep;
  const auto m = train_logistic(x, y, {}, &rep);
  std::vector<int> t, p;
  for (Eigen::Index i = 0; i < 200; ++i) {
    t.push_back(static_cast<int>(y[i]));
    p.push_back(m.predict(x.row(i).transpose()));
  }
  CHECK(f1_score(t, p) == 1.0);
  CHECK(rep.iterations > 0);
}

TEST_CASE("training is deterministic and rejects one class") {
  Rng rng(11);
  const Matrix x = random_matrix(rng, 300, 4);
  Vector y(300);
  for (Eigen::Index i = 0; i < 300; ++i) y[i] = x(i, 0) + 0.5 * rng.normal() > 0;
  const auto a = train_logistic(x, y);
  const auto b = train_logistic(x, y);
  CHECK(a.bias == b.bias);
  CHECK(a.weights == b.weights);
  CHECK_THROWS(train_logistic(x, Vector::Ones(300)));
  CHECK_THROWS(train_logistic(x, Vector::Zero(300)));
}

TEST_CASE("f1 and folds") {
  CHECK(f1_score({1, 0, 1, 1}, {1, 0, 0, 1}) == doctest::Approx(0.8));
  CHECK(f1_score({0, 0}, {0, 0}) == 1.0);
  CHECK(f1_score({1, 1}, {0, 0}) == 0.0);
  const auto folds = kfold_indices(103, 10, 5);
  CHECK(folds.size() == 10);
  std::vector<int> seen(103, 0);
  for (const auto& f : folds) {
    CHECK(f.size() >= 10);
    CHECK(f.size() <= 11);
    for (auto i : f) ++seen[i];
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(kfold_indices(103, 10, 5) == folds);
}

TEST_CASE("cross validation reports fold spread") {
  Rng rng(13);
  const Matrix x = random_matrix(rng, 1000, 3);
  Vector y(1000);
  for (Eigen::Index i = 0; i < 1000; ++i) y[i] = x(i, 0) - x(i, 1) + 0.3 * rng.normal() > 0;
  const auto cv = cross_validate_logistic(x, y, 20, 1);
  CHECK(cv.fold_f1.size() == 20);
  CHECK(cv.mean > 0.85);
  CHECK(cv.stddev >= 0.0);
  CHECK(cv.stddev < 0.1);
}

TEST_CASE("gram matrix parallel equals serial") {
  Rng rng(17);
  const Matrix a = random_matrix(rng, 300, 7), b = random_matrix(rng, 200, 7);
  const Matrix g1 = gram_matrix(a, b, 0.2), g2 = gram_matrix_serial(a, b, 0.2);
  CHECK((g1 - g2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(rbf_kernel(a.row(0).transpose(), a.row(0).transpose(), 0.2) == 1.0);
}

TEST_CASE("kernel ridge residuals respect the regularization bound") {
  Rng rng(19);
  for (double lambda : {1e-3, 1e-1, 10.0}) {
    const Matrix x = random_matrix(rng, 80, 3);
    Vector y(80);
    for (Eigen::Index i = 0; i < 80; ++i) y[i] = std::sin(x(i, 0)) + 0.1 * rng.normal() + 5;
    const auto m = train_kernel_ridge(x, y, 0.5, lambda);
    const Vector centred = y.array() - m.bias;
    const Vector r = y - m.predict(x);
    // Training residual is lambda·alpha and shrinks y − b by lambda/(mu + lambda) per eigendirection.
    CHECK((r - lambda * m.alpha).norm() <= 1e-8 * (1 + r.norm()));
    CHECK(r.norm() <= centred.norm() + 1e-9);
    const Matrix k = gram_matrix_serial(m.support, m.support, m.gamma);
    const double mu_max = Eigen::SelfAdjointEigenSolver<Matrix>(k).eigenvalues().maxCoeff();
    CHECK(r.norm() >= lambda / (mu_max + lambda) * centred.norm() - 1e-9);
  }
}

TEST_CASE("kernel ridge degenerate and constant cases") {
  Rng rng(23);
  const Matrix x = random_matrix(rng, 50, 2);
  Vector y(50);
  for (auto& v : y) v = rng.normal();
  const auto flat = train_kernel_ridge(x, y, 0.0, 1.0);
  const double c = flat.predict(Vector(x.row(0).transpose()));
  CHECK(c == doctest::Approx(flat.bias + flat.alpha.sum()));
  Vector q(2);
  q << 100, -100;
  CHECK(flat.predict(q) == doctest::Approx(c));

  const auto constant = train_kernel_ridge(x, Vector::Constant(50, 7.5), 0.7, 1e-3);
  for (int i = 0; i < 10; ++i) {
    Vector z(2);
    z << rng.normal(), rng.normal();
    CHECK(constant.predict(z) == doctest::Approx(7.5));
  }
  CHECK_THROWS(train_kernel_ridge(x, y, -1.0, 1.0));
  CHECK_THROWS(train_kernel_ridge(x, y, 1.0, 0.0));
}

TEST_CASE("kernel ridge interpolates near support points") {
  Matrix x(3, 1);
  x << 0, 5, 10;
  Vector y(3);
  y << 1, 20, 3;
  const auto m = train_kernel_ridge(x, y, 5.0, 1e-6);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(m.predict(Vector(x.row(i).transpose())) == doctest::Approx(y[i]).epsilon(1e-4));
}

TEST_CASE("singular systems escalate lambda") {
  Matrix x = Matrix::Zero(30, 2);  // every row identical: rank-one Gram matrix
  Vector y = Vector::LinSpaced(30, 0, 1);
  KernelRidgeReport rep;
  const auto m = train_kernel_ridge(x, y, 1.0, 1e-20, &rep);
  CHECK(rep.lambda_escalations > 0);
  CHECK(rep.lambda_used > 1e-20);
  CHECK(m.lambda == rep.lambda_used);
  CHECK(std::isfinite(m.predict(Vector(x.row(0).transpose()))));
}

TEST_CASE("grid search covers every pair") {
  Rng rng(29);
  const Matrix x = random_matrix(rng, 60, 2);
  Vector y(60);
  for (Eigen::Index i = 0; i < 60; ++i) y[i] = x(i, 0) * x(i, 0);
  const auto grid = kernel_ridge_grid(x, y, {0.1, 1.0}, {1e-3, 1e-1, 1.0}, 5, 3);
  CHECK(grid.size() == 6);
  CHECK(grid[0].gamma == 0.1);
  CHECK(grid[0].lambda == 1e-3);
  CHECK(grid[5].gamma == 1.0);
  for (const auto& g : grid) CHECK(g.cv_rmse > 0);
  CHECK(rmse(Vector::Ones(4), Vector::Ones(4)) == 0.0);
}

TEST_CASE("model container round trip") {
  ModelFile f;
  f.kind = ModelKind::Rbf;
  f.set("gamma", 0.25);
  f.set("alpha", {1.5, -2.0, 3e-300});
  std::stringstream ss;
  write_model(ss, f);
  const auto bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "AGGM");
  const auto g = read_model(ss);
  CHECK(g.kind == ModelKind::Rbf);
  CHECK(g.fields == f.fields);
  CHECK(g.scalar("gamma") == 0.25);
  CHECK_THROWS(g.get("alpha", 2));
  CHECK_THROWS(g.get("missing"));
  CHECK(model_text(g).find("alpha = ") != std::string::npos);

  std::stringstream again;
  write_model(again, g);
  CHECK(again.str() == bytes);

  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream b1(bad);
  CHECK_THROWS(read_model(b1));
  bad = bytes;
  bad[4] = 9;  // version
  std::stringstream b2(bad);
  CHECK_THROWS(read_model(b2));
  bad = bytes;
  bad[8] = 42;  // kind
  std::stringstream b3(bad);
  CHECK_THROWS(read_model(b3));
  std::stringstream b4(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS(read_model(b4));
}
