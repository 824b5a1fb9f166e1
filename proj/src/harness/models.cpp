#include "aggrate/harness/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "aggrate/common/rng.hpp"
#include "aggrate/ml/model_io.hpp"

namespace aggrate::harness {

LoadRegime load_regime(double rate_bps) {
  const double r = rate_bps / 1e6;
  if (r >= 50 && r <= 250) return LoadRegime::Low;
  if (r >= 300 && r <= 500) return LoadRegime::Mid;
  if (r >= 550 && r <= 700) return LoadRegime::High;
  if (r >= 750) return LoadRegime::Saturated;
  return LoadRegime::Between;
}

std::string to_string(LoadRegime r) {
  switch (r) {
    case LoadRegime::Low: return "low";
    case LoadRegime::Mid: return "mid";
    case LoadRegime::High: return "high";
    case LoadRegime::Saturated: return "saturated";
    case LoadRegime::Between: return "between";
  }
  return "?";
}

TsCorpusSpec default_boundary_corpus() {
  TsCorpusSpec s;
  s.config.duration = 1.2;
  for (int r = 50; r <= 800; r += 50) s.rates.push_back(r * 1e6);
  s.seeds = {1, 2};
  return s;
}

std::vector<tsml::TsRun> simulate_ts_runs(const TsCorpusSpec& spec) {
  const std::size_t ns = spec.seeds.size();
  const std::size_t total = spec.rates.size() * ns;
  std::vector<tsml::TsRun> runs(total);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < total; ++i) {
    runs[i] = tsml::simulate_ts_run(spec.config, spec.rates[i / ns], spec.seeds[i % ns]);
  }
  return runs;
}

tsml::BoundaryFeatures boundary_training_set(std::span<const tsml::TsRun> runs, int m, bool use_sigma,
                                             std::size_t rows_per_run) {
  std::vector<tsml::BoundaryFeatures> parts;
  Eigen::Index rows = 0;
  for (const auto& run : runs) {
    const auto t = run.kernel_us();
    const auto y = run.labels();
    auto f = tsml::build_boundary_features(t, y, m, use_sigma);
    if (f.x.rows() == 0) continue;
    auto rng = Rng::stream(run.seed, 1000 + static_cast<std::uint64_t>(std::llround(run.rate / 1e6)));
    std::vector<std::size_t> idx(rows_per_run);
    for (auto& i : idx) i = rng.below(static_cast<std::uint64_t>(f.x.rows()));
    std::sort(idx.begin(), idx.end());
    tsml::BoundaryFeatures s;
    s.x = ml::take_rows(f.x, idx);
    s.y = ml::take_rows(f.y, idx);
    for (auto i : idx) s.packet.push_back(f.packet[i]);
    rows += s.x.rows();
    parts.push_back(std::move(s));
  }
  if (parts.empty()) throw std::invalid_argument("boundary_training_set: no run long enough for m");
  tsml::BoundaryFeatures out;
  out.x.resize(rows, parts.front().x.cols());
  out.y.resize(rows);
  Eigen::Index o = 0;
  for (const auto& p : parts) {
    out.x.middleRows(o, p.x.rows()) = p.x;
    out.y.segment(o, p.y.size()) = p.y;
    out.packet.insert(out.packet.end(), p.packet.begin(), p.packet.end());
    o += p.x.rows();
  }
  return out;
}

BoundaryEval evaluate_boundary(const tsml::BoundaryModel& model, const tsml::TsRun& run) {
  BoundaryEval e;
  e.rate = run.rate;
  e.seed = run.seed;
  const auto labels = model.predict_labels(run.kernel_us());
  const auto truth = run.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    e.truth.push_back(truth[i]);
    e.pred.push_back(labels[i]);
  }
  e.f1 = ml::f1_score(e.truth, e.pred);
  return e;
}

double pooled_f1(std::span<const BoundaryEval> evals, LoadRegime regime) {
  std::vector<int> t, p;
  for (const auto& e : evals) {
    if (load_regime(e.rate) != regime) continue;
    t.insert(t.end(), e.truth.begin(), e.truth.end());
    p.insert(p.end(), e.pred.begin(), e.pred.end());
  }
  if (t.empty()) return std::numeric_limits<double>::quiet_NaN();
  return ml::f1_score(t, p);
}

SlotRows slot_rows(std::span<const tsml::TsRun> runs, const tsml::BoundaryModel& boundary, int d, int n_max,
                   bool kernel_truth) {
  std::vector<tsml::SlotFeatures> parts(runs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto labels = boundary.predict_labels(runs[i].kernel_us());
    const auto pred = tsml::predicted_slot_stats(runs[i], labels, n_max);
    const auto truth = kernel_truth ? tsml::kernel_truth_slot_stats(runs[i]) : tsml::true_slot_stats(runs[i]);
    parts[i] = tsml::build_slot_features(pred, truth, d);
  }
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.x.rows();
  SlotRows out;
  out.x.resize(rows, d + 2);
  out.y.resize(rows);
  out.raw.resize(rows);
  Eigen::Index o = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.x.rows() == 0) continue;
    out.x.middleRows(o, p.x.rows()) = p.x;
    out.y.segment(o, p.y.size()) = p.y;
    out.raw.segment(o, p.raw.size()) = p.raw;
    out.rate.insert(out.rate.end(), static_cast<std::size_t>(p.x.rows()), runs[i].rate);
    o += p.x.rows();
  }
  return out;
}

SlotRows filter_regime(const SlotRows& rows, LoadRegime regime) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < rows.rate.size(); ++i) {
    if (load_regime(rows.rate[i]) == regime) keep.push_back(i);
  }
  SlotRows out;
  out.x = ml::take_rows(rows.x, keep);
  out.y = ml::take_rows(rows.y, keep);
  out.raw = ml::take_rows(rows.raw, keep);
  for (auto i : keep) out.rate.push_back(rows.rate[i]);
  return out;
}

RbfTraining train_rbf_corrector(const SlotRows& rows, int d, int n_max, const std::vector<double>& gammas,
                                const std::vector<double>& lambdas, int folds, std::uint64_t seed) {
  if (rows.x.rows() < d) throw std::invalid_argument("train_rbf_corrector: fewer rows than d");
  RbfTraining t;
  t.grid = ml::kernel_ridge_grid(rows.x, rows.y, gammas, lambdas, folds, seed);
  t.best = *std::min_element(t.grid.begin(), t.grid.end(),
                             [](const auto& a, const auto& b) { return a.cv_rmse < b.cv_rmse; });
  t.model.d = d;
  t.model.n_max = n_max;
  t.model.krr = ml::train_kernel_ridge(rows.x, rows.y, t.best.gamma, t.best.lambda);
  return t;
}

RmsePair slot_rmse(const SlotRows& rows, const tsml::RbfCorrector& model) {
  RmsePair r;
  r.n = static_cast<std::size_t>(rows.x.rows());
  if (r.n == 0) return r;
  double se = 0.0, se_raw = 0.0;
  for (Eigen::Index i = 0; i < rows.x.rows(); ++i) {
    const ml::Vector v = rows.x.row(i).transpose();
    const double p = model.predict(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
    se += (p - rows.y[i]) * (p - rows.y[i]);
    se_raw += (rows.raw[i] - rows.y[i]) * (rows.raw[i] - rows.y[i]);
  }
  r.corrected = std::sqrt(se / static_cast<double>(r.n));
  r.raw = std::sqrt(se_raw / static_cast<double>(r.n));
  return r;
}

std::vector<clf::ClfTrace> simulate_clf_traces(const clf::ClfCorpusConfig& config,
                                               const std::vector<clf::ClfScenario>& scenarios,
                                               const std::vector<std::uint64_t>& seeds) {
  const std::size_t ns = seeds.size();
  const std::size_t total = scenarios.size() * ns;
  std::vector<clf::ClfTrace> out(total);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < total; ++i) out[i] = clf::simulate_clf_trace(config, scenarios[i / ns], seeds[i % ns]);
  return out;
}

clf::ClfData clf_dataset(std::span<const clf::ClfTrace> traces, int n, int p) {
  std::vector<clf::ClfData> parts;
  parts.reserve(traces.size());
  for (const auto& t : traces) parts.push_back(clf::clf_features(t, n, p));
  return clf::concat(parts);
}

clf::ClfModel train_clf_balanced(const clf::ClfData& data, int n, int p, std::uint64_t seed,
                                 const ml::LogisticOptions& options) {
  const auto rows = clf::balanced_rows(data.y, seed);
  return clf::train_clf(ml::take_rows(data.x, rows), ml::take_rows(data.y, rows), n, p, options);
}

double clf_f1(const clf::ClfModel& model, const clf::ClfData& data) {
  std::vector<int> t, p;
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    const ml::Vector v = data.x.row(i).transpose();
    t.push_back(data.y[i] > 0.5 ? 1 : 0);
    p.push_back(model.predict(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))));
  }
  return ml::f1_score(t, p);
}

namespace {

enum class CorpusKind { Ts, Clf };

CorpusKind sniff(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path);
  std::string line;
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
  }
  if (line.rfind("packet,", 0) == 0) return CorpusKind::Ts;
  if (line.rfind("frame,", 0) == 0) return CorpusKind::Clf;
  throw std::runtime_error("unrecognized corpus schema in " + path);
}

std::string base(const std::string& path) { return std::filesystem::path(path).filename().string(); }

struct Pool {
  std::vector<int> truth, pred;
};

}  // namespace

std::vector<EvalRow> eval_models(const std::vector<std::string>& model_paths,
                                 const std::vector<std::string>& corpus_paths) {
  struct Boundary {
    std::string name;
    tsml::BoundaryModel model;
  };
  struct Rbf {
    std::string name;
    tsml::RbfCorrector model;
  };
  struct Clf {
    std::string name;
    clf::ClfModel model;
  };
  std::vector<Boundary> boundaries;
  std::vector<Rbf> rbfs;
  std::vector<Clf> clfs;
  for (const auto& p : model_paths) {
    const auto file = ml::load_model(p);
    switch (file.kind) {
      case ml::ModelKind::Logit:
      case ml::ModelKind::Threshold: boundaries.push_back({base(p), tsml::BoundaryModel::from_file(file)}); break;
      case ml::ModelKind::Rbf: rbfs.push_back({base(p), tsml::RbfCorrector::from_file(file)}); break;
      case ml::ModelKind::Classifier: clfs.push_back({base(p), clf::ClfModel::from_file(file)}); break;
    }
  }
  if (!rbfs.empty() && boundaries.empty())
    throw std::invalid_argument("eval: an rbf corrector needs a boundary model to produce its input");

  std::vector<EvalRow> rows;
  std::map<std::pair<std::string, std::string>, Pool> pools;  // (model, level)
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> slot_se;  // (model, level) -> raw, rbf
  std::map<std::pair<std::string, std::string>, std::size_t> slot_n;
  bool ts_seen = false, clf_seen = false;

  for (const auto& path : corpus_paths) {
    const auto kind = sniff(path);
    std::ifstream in(path);
    if (kind == CorpusKind::Ts) {
      if (boundaries.empty()) throw std::invalid_argument("eval: no boundary model for timestamp corpus " + path);
      ts_seen = true;
      const auto run = tsml::read_ts_csv(in);
      const auto level = to_string(load_regime(run.rate));
      for (const auto& b : boundaries) {
        const auto e = evaluate_boundary(b.model, run);
        EvalRow r;
        r.model = b.name;
        r.corpus = base(path);
        r.level = level;
        r.count = e.truth.size();
        r.f1 = e.f1;
        rows.push_back(r);
        auto& pool = pools[{b.name, level}];
        pool.truth.insert(pool.truth.end(), e.truth.begin(), e.truth.end());
        pool.pred.insert(pool.pred.end(), e.pred.begin(), e.pred.end());
      }
      for (const auto& c : rbfs) {
        const auto sr = slot_rows(std::span<const tsml::TsRun>(&run, 1), boundaries.front().model, c.model.d,
                                  c.model.n_max, true);
        const auto err = slot_rmse(sr, c.model);
        EvalRow r;
        r.model = c.name;
        r.corpus = base(path);
        r.level = level;
        r.count = err.n;
        r.rmse_raw = err.raw;
        r.rmse = err.corrected;
        rows.push_back(r);
        auto& se = slot_se[{c.name, level}];
        se.first += err.raw * err.raw * static_cast<double>(err.n);
        se.second += err.corrected * err.corrected * static_cast<double>(err.n);
        slot_n[{c.name, level}] += err.n;
      }
    } else {
      if (clfs.empty()) throw std::invalid_argument("eval: no classifier for frame corpus " + path);
      clf_seen = true;
      std::string comment;
      const auto data = clf::read_clf_csv(in, &comment);
      const std::string level = comment.empty() ? "all" : comment;
      for (const auto& c : clfs) {
        if (data.x.cols() != c.model.n + 1)
          throw std::invalid_argument("eval: classifier " + c.name + " expects " + std::to_string(c.model.n + 1) +
                                      " features, corpus " + path + " has " + std::to_string(data.x.cols()));
        EvalRow r;
        r.model = c.name;
        r.corpus = base(path);
        r.level = level;
        r.count = static_cast<std::size_t>(data.x.rows());
        r.f1 = clf_f1(c.model, data);
        rows.push_back(r);
        auto& pool = pools[{c.name, "all"}];
        for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
          const ml::Vector v = data.x.row(i).transpose();
          pool.truth.push_back(data.y[i] > 0.5 ? 1 : 0);
          pool.pred.push_back(c.model.predict(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))));
        }
      }
    }
  }
  if (!boundaries.empty() && !ts_seen) throw std::invalid_argument("eval: boundary model given without a timestamp corpus");
  if (!clfs.empty() && !clf_seen) throw std::invalid_argument("eval: classifier given without a frame corpus");

  for (const auto& [key, pool] : pools) {
    EvalRow r;
    r.model = key.first;
    r.corpus = "*";
    r.level = key.second;
    r.count = pool.truth.size();
    r.f1 = ml::f1_score(pool.truth, pool.pred);
    rows.push_back(r);
  }
  for (const auto& [key, se] : slot_se) {
    EvalRow r;
    r.model = key.first;
    r.corpus = "*";
    r.level = key.second;
    r.count = slot_n[key];
    if (r.count > 0) {
      r.rmse_raw = std::sqrt(se.first / static_cast<double>(r.count));
      r.rmse = std::sqrt(se.second / static_cast<double>(r.count));
    }
    rows.push_back(r);
  }
  return rows;
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "model,corpus,level,count,f1,rmse_raw,rmse\n";
  auto num = [](double v) {
    if (std::isnan(v)) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out << r.model << ',' << r.corpus << ",\"" << r.level << "\"," << r.count << ',' << num(r.f1) << ','
        << num(r.rmse_raw) << ',' << num(r.rmse) << '\n';
  }
  return out.str();
}

}  // namespace aggrate::harness
