#include "aggrate/tsml/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace aggrate::tsml {

namespace {

std::vector<double> to_vec(const ml::Vector& v) { return {v.data(), v.data() + v.size()}; }

ml::Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const ml::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void put_scaler(ml::ModelFile& f, const ml::Scaler& s) {
  f.set("scaler_mean", to_vec(s.mean));
  f.set("scaler_scale", to_vec(s.scale));
}

ml::Scaler get_scaler(const ml::ModelFile& f, long dim) {
  ml::Scaler s;
  s.mean = to_eigen(f.get("scaler_mean", dim));
  s.scale = to_eigen(f.get("scaler_scale", dim));
  return s;
}

int get_int(const ml::ModelFile& f, const char* name, int lo, int hi) {
  const double v = f.scalar(name);
  if (!(v >= lo && v <= hi) || v != std::floor(v)) throw std::runtime_error(std::string("model field out of range: ") + name);
  return static_cast<int>(v);
}

}  // namespace

BoundaryFeatures build_boundary_features(std::span<const double> t_us, std::span<const int> labels, int m,
                                         bool use_sigma) {
  if (m < 1) throw std::invalid_argument("build_boundary_features: m must be >= 1");
  if (!labels.empty() && labels.size() != t_us.size())
    throw std::invalid_argument("build_boundary_features: labels/timestamps length mismatch");
  BoundaryFeatures out;
  const std::size_t n = t_us.size();
  const std::size_t rows = n > static_cast<std::size_t>(m) ? n - static_cast<std::size_t>(m) : 0;
  const int cols = m + (use_sigma ? 1 : 0);
  out.x.resize(static_cast<Eigen::Index>(rows), cols);
  if (!labels.empty()) out.y.resize(static_cast<Eigen::Index>(rows));
  out.packet.reserve(rows);
  for (std::size_t i = static_cast<std::size_t>(m); i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i - static_cast<std::size_t>(m));
    double sum = 0, sq = 0;
    for (int k = 0; k < m; ++k) {
      const std::size_t j = i - static_cast<std::size_t>(m - 1 - k);
      const double gap = t_us[j] - t_us[j - 1];
      if (gap < 0) throw std::invalid_argument("build_boundary_features: timestamps must be non-decreasing");
      out.x(r, k) = gap;
      sum += gap;
      sq += gap * gap;
    }
    if (use_sigma) {
      const double mean = sum / m;
      out.x(r, m) = std::sqrt(std::max(0.0, sq / m - mean * mean));
    }
    if (!labels.empty()) out.y[r] = labels[i] ? 1.0 : 0.0;
    out.packet.push_back(i);
  }
  return out;
}

double BoundaryModel::predict_proba(std::span<const double> features) const {
  const auto dim = static_cast<std::size_t>(m + (uses_sigma ? 1 : 0));
  if (features.size() != dim) throw std::invalid_argument("boundary model: feature dimension mismatch");
  return logit.predict_proba(to_eigen({features.begin(), features.end()}));
}

std::vector<int> BoundaryModel::predict_labels(std::span<const double> t_us) const {
  std::vector<int> labels(t_us.size(), -1);
  const auto f = build_boundary_features(t_us, {}, m, uses_sigma);
  if (f.x.rows() == 0) return labels;
  const ml::Vector p = logit.predict_proba(f.x);
  for (Eigen::Index r = 0; r < p.size(); ++r) labels[f.packet[static_cast<std::size_t>(r)]] = p[r] >= 0.5 ? 1 : 0;
  return labels;
}

double BoundaryModel::threshold_us() const {
  if (m != 1 || uses_sigma) throw std::logic_error("threshold_us: only defined for m=1 without sigma");
  // w·(t − mean)/scale + b = 0
  const double w = logit.weights[0];
  if (w == 0) return std::numeric_limits<double>::infinity();
  return logit.scaler.mean[0] - logit.bias * logit.scaler.scale[0] / w;
}

ml::ModelFile BoundaryModel::to_file() const {
  ml::ModelFile f;
  f.kind = (m == 1 && !uses_sigma) ? ml::ModelKind::Threshold : ml::ModelKind::Logit;
  f.set("m", m);
  f.set("uses_sigma", uses_sigma ? 1.0 : 0.0);
  f.set("bias", logit.bias);
  f.set("weights", to_vec(logit.weights));
  put_scaler(f, logit.scaler);
  if (f.kind == ml::ModelKind::Threshold) f.set("threshold_us", threshold_us());
  return f;
}

BoundaryModel BoundaryModel::from_file(const ml::ModelFile& f) {
  if (f.kind != ml::ModelKind::Logit && f.kind != ml::ModelKind::Threshold)
    throw std::runtime_error(std::string("expected a boundary model, got ") + ml::to_string(f.kind));
  BoundaryModel b;
  b.m = get_int(f, "m", 1, 100000);
  b.uses_sigma = f.scalar("uses_sigma") != 0.0;
  const long dim = b.m + (b.uses_sigma ? 1 : 0);
  b.logit.bias = f.scalar("bias");
  b.logit.weights = to_eigen(f.get("weights", dim));
  b.logit.scaler = get_scaler(f, dim);
  return b;
}

BoundaryModel train_boundary(const BoundaryFeatures& data, int m, bool use_sigma, const ml::LogisticOptions& options) {
  if (data.x.cols() != m + (use_sigma ? 1 : 0)) throw std::invalid_argument("train_boundary: feature width mismatch");
  BoundaryModel b;
  b.m = m;
  b.uses_sigma = use_sigma;
  b.logit = ml::train_logistic(data.x, data.y, options);
  return b;
}

std::vector<AggEstimate> labels_to_agg_frames(std::span<const int> labels, int n_max) {
  if (n_max < 1) throw std::invalid_argument("labels_to_agg: n_max must be >= 1");
  std::vector<AggEstimate> out;
  std::size_t i = 0;
  while (i < labels.size() && labels[i] != 1) ++i;
  if (i == labels.size()) return out;
  AggEstimate cur{i, 1};
  for (++i; i < labels.size(); ++i) {
    if (labels[i] == 1 || cur.n == n_max) {
      out.push_back(cur);
      cur = {i, 1};
    } else {
      ++cur.n;
    }
  }
  return out;
}

std::vector<int> labels_to_agg(std::span<const int> labels, int n_max) {
  std::vector<int> out;
  for (const auto& f : labels_to_agg_frames(labels, n_max)) out.push_back(f.n);
  return out;
}

std::vector<SlotStat> slot_stats(std::span<const double> t_us, std::span<const double> values, double slot_s) {
  if (t_us.size() != values.size()) throw std::invalid_argument("slot_stats: length mismatch");
  if (!(slot_s > 0)) throw std::invalid_argument("slot_stats: slot must be > 0");
  struct Acc {
    double sum = 0, sq = 0;
    int n = 0;
  };
  std::map<long, Acc> acc;
  for (std::size_t i = 0; i < t_us.size(); ++i) {
    auto& a = acc[static_cast<long>(std::floor(t_us[i] * 1e-6 / slot_s))];
    a.sum += values[i];
    a.sq += values[i] * values[i];
    ++a.n;
  }
  std::vector<SlotStat> out;
  for (const auto& [slot, a] : acc) {
    const double mean = a.sum / a.n;
    out.push_back({slot, mean, std::sqrt(std::max(0.0, a.sq / a.n - mean * mean)), a.n});
  }
  return out;
}

SlotFeatures build_slot_features(std::span<const SlotStat> predicted, std::span<const SlotStat> truth, int d) {
  if (d < 1) throw std::invalid_argument("build_slot_features: d must be >= 1");
  std::map<long, double> target;
  for (const auto& s : truth) target[s.slot] = s.mean;
  std::vector<std::vector<double>> rows;
  SlotFeatures out;
  std::vector<double> ys, raws;
  for (std::size_t j = static_cast<std::size_t>(d - 1); j < predicted.size(); ++j) {
    const std::size_t lo = j + 1 - static_cast<std::size_t>(d);
    if (predicted[j].slot - predicted[lo].slot != d - 1) continue;  // gap in history
    double y = 0;
    if (!truth.empty()) {
      const auto it = target.find(predicted[j].slot);
      if (it == target.end()) continue;
      y = it->second;
    }
    std::vector<double> row;
    for (std::size_t k = lo; k <= j; ++k) row.push_back(predicted[k].mean);
    row.push_back(predicted[j].stddev);
    row.push_back(predicted[j].count);
    rows.push_back(std::move(row));
    ys.push_back(y);
    raws.push_back(predicted[j].mean);
    out.slot.push_back(predicted[j].slot);
  }
  out.x.resize(static_cast<Eigen::Index>(rows.size()), d + 2);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < d + 2; ++c) out.x(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  if (!truth.empty()) out.y = to_eigen(ys);
  out.raw = to_eigen(raws);
  return out;
}

double RbfCorrector::predict(std::span<const double> features) const {
  if (features.size() != static_cast<std::size_t>(d + 2)) throw std::invalid_argument("rbf corrector: feature dimension mismatch");
  const double v = krr.predict(to_eigen({features.begin(), features.end()}));
  return std::clamp(v, 1.0, static_cast<double>(n_max));
}

ml::ModelFile RbfCorrector::to_file() const {
  ml::ModelFile f;
  f.kind = ml::ModelKind::Rbf;
  f.set("d", d);
  f.set("n_max", n_max);
  f.set("gamma", krr.gamma);
  f.set("lambda", krr.lambda);
  f.set("bias", krr.bias);
  f.set("alpha", to_vec(krr.alpha));
  f.set("support", std::vector<double>(krr.support.data(), krr.support.data() + krr.support.size()));
  put_scaler(f, krr.scaler);
  return f;
}

RbfCorrector RbfCorrector::from_file(const ml::ModelFile& f) {
  if (f.kind != ml::ModelKind::Rbf) throw std::runtime_error(std::string("expected an rbf model, got ") + ml::to_string(f.kind));
  RbfCorrector c;
  c.d = get_int(f, "d", 1, 1000);
  c.n_max = get_int(f, "n_max", 1, 1 << 20);
  const long dim = c.d + 2;
  c.krr.gamma = f.scalar("gamma");
  c.krr.lambda = f.scalar("lambda");
  c.krr.bias = f.scalar("bias");
  c.krr.alpha = to_eigen(f.get("alpha"));
  const auto& sup = f.get("support", static_cast<long>(c.krr.alpha.size()) * dim);
  c.krr.support = Eigen::Map<const ml::Matrix>(sup.data(), c.krr.alpha.size(), dim);
  c.krr.scaler = get_scaler(f, dim);
  return c;
}

}  // namespace aggrate::tsml
