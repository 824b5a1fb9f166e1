#include "aggrate/clf/bottleneck.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "aggrate/common/rng.hpp"

namespace aggrate::clf {

ClfFeatureBuilder::ClfFeatureBuilder(int n, int p) : n_(n), p_(p) {
  if (n < 1) throw std::invalid_argument("clf: n must be >= 1");
  if (p < 1) throw std::invalid_argument("clf: p must be >= 1");
  aggs_.assign(static_cast<std::size_t>(n), 0);
}

double ClfFeatureBuilder::loss_fraction() const {
  if (!max_) return 0.0;
  const std::uint64_t span = std::min<std::uint64_t>(static_cast<std::uint64_t>(p_), *max_ - *first_ + 1);
  return 1.0 - static_cast<double>(window_.size()) / static_cast<double>(span);
}

std::optional<std::vector<double>> ClfFeatureBuilder::push(int agg, std::span<const std::uint64_t> seqs) {
  if (agg < 0) throw std::invalid_argument("clf: negative aggregation");
  aggs_[frames_ % aggs_.size()] = agg;
  ++frames_;
  for (auto s : seqs) {
    if (!first_ || s < *first_) first_ = s;
    if (!max_ || s > *max_) max_ = s;
  }
  if (max_) {
    const std::uint64_t lo = *max_ + 1 >= static_cast<std::uint64_t>(p_) ? *max_ + 1 - static_cast<std::uint64_t>(p_) : 0;
    for (auto s : seqs) {
      if (s >= lo) window_.insert(s);
    }
    window_.erase(window_.begin(), window_.lower_bound(lo));
  }
  if (frames_ < static_cast<std::size_t>(n_) || !max_ || *max_ - *first_ + 1 < static_cast<std::uint64_t>(p_))
    return std::nullopt;
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(n_) + 1);
  for (int k = n_ - 1; k >= 0; --k) x.push_back(aggs_[(frames_ - 1 - static_cast<std::size_t>(k)) % aggs_.size()]);
  x.push_back(loss_fraction());
  return x;
}

std::optional<std::vector<double>> ClfFeatureBuilder::push(const meter::ObservedFrame& frame) {
  return push(static_cast<int>(frame.received_seqs.size()), frame.received_seqs);
}

double ClfModel::predict_proba(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(n + 1)) throw std::invalid_argument("clf model: feature dimension mismatch");
  return logit.predict_proba(ml::Vector(Eigen::Map<const ml::Vector>(x.data(), static_cast<Eigen::Index>(x.size()))));
}

ml::ModelFile ClfModel::to_file() const {
  ml::ModelFile f;
  f.kind = ml::ModelKind::Classifier;
  f.set("n", n);
  f.set("p", p);
  f.set("bias", logit.bias);
  f.set("weights", std::vector<double>(logit.weights.data(), logit.weights.data() + logit.weights.size()));
  f.set("scaler_mean", std::vector<double>(logit.scaler.mean.data(), logit.scaler.mean.data() + logit.scaler.mean.size()));
  f.set("scaler_scale", std::vector<double>(logit.scaler.scale.data(), logit.scaler.scale.data() + logit.scaler.scale.size()));
  return f;
}

ClfModel ClfModel::from_file(const ml::ModelFile& f) {
  if (f.kind != ml::ModelKind::Classifier)
    throw std::runtime_error(std::string("expected a classifier model, got ") + ml::to_string(f.kind));
  ClfModel m;
  const double n = f.scalar("n"), p = f.scalar("p");
  if (!(n >= 1 && n <= 100000) || !(p >= 1 && p <= 1e9)) throw std::runtime_error("classifier model: bad n or p");
  m.n = static_cast<int>(n);
  m.p = static_cast<int>(p);
  auto vec = [&](const char* name) {
    const auto& v = f.get(name, m.n + 1);
    return ml::Vector(Eigen::Map<const ml::Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  m.logit.bias = f.scalar("bias");
  m.logit.weights = vec("weights");
  m.logit.scaler.mean = vec("scaler_mean");
  m.logit.scaler.scale = vec("scaler_scale");
  return m;
}

ClfModel train_clf(const ml::Matrix& x, const ml::Vector& y, int n, int p, const ml::LogisticOptions& options) {
  if (x.cols() != n + 1) throw std::invalid_argument("train_clf: feature width mismatch");
  ClfModel m;
  m.n = n;
  m.p = p;
  m.logit = ml::train_logistic(x, y, options);
  return m;
}

std::vector<std::size_t> balanced_rows(const ml::Vector& y, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (Eigen::Index i = 0; i < y.size(); ++i) (y[i] > 0.5 ? pos : neg).push_back(static_cast<std::size_t>(i));
  auto& big = pos.size() > neg.size() ? pos : neg;
  const auto& small = pos.size() > neg.size() ? neg : pos;
  Rng rng(seed);
  for (std::size_t i = 0; i < small.size() && i < big.size(); ++i) std::swap(big[i], big[i + rng.below(big.size() - i)]);
  big.resize(small.size());
  std::vector<std::size_t> out(pos);
  out.insert(out.end(), neg.begin(), neg.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Transition> detect_transitions(std::span<const double> t_us, std::span<const int> labels, int h,
                                           int initial) {
  if (t_us.size() != labels.size()) throw std::invalid_argument("detect_transitions: length mismatch");
  if (h < 1) throw std::invalid_argument("detect_transitions: h must be >= 1");
  std::vector<Transition> out;
  int state = initial;
  int run = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0 && t_us[i] < t_us[i - 1]) throw std::invalid_argument("detect_transitions: times must be ordered");
    if (labels[i] != state) {
      if (++run >= h) {
        out.push_back({t_us[i], state, labels[i]});
        state = labels[i];
        run = 0;
      }
    } else {
      run = 0;
    }
  }
  return out;
}

}  // namespace aggrate::clf
