// aggrate: run scenarios, sweep parameters, train and score the models.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aggrate/common/error.hpp"
#include "aggrate/harness/metrics.hpp"
#include "aggrate/harness/models.hpp"
#include "aggrate/harness/run.hpp"
#include "aggrate/harness/scenario.hpp"
#include "aggrate/ml/logistic.hpp"
#include "aggrate/ml/model_io.hpp"
#include "aggrate/sim/trace_io.hpp"

using namespace aggrate;
namespace fs = std::filesystem;

namespace {

// Scenario inputs shared by `run` and `sweep`: an optional file, one flag per
// config key, and free-form `--set key=value` overrides applied last.
struct ScenarioArgs {
  std::string file;
  std::vector<std::pair<std::string, std::string>> fields;  // key, value in declaration order
  std::map<std::string, std::string> given;
  std::vector<std::string> sets;
  int stations = 0;

  void attach(CLI::App& app) {
    app.add_option("--scenario", file, "Scenario file (key = value with [section] headers)")->check(CLI::ExistingFile);
    app.add_option("--stations", stations, "Replicate station 0 to this many stations");
    app.add_option("--set", sets, "Override a field, e.g. --set station[1].mcs_rate=195e6");
    std::istringstream text(harness::print_scenario(harness::default_scenario()));
    std::string line, section;
    while (std::getline(text, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (line[0] == '[') {
        section = line.substr(1, line.find(']') - 1);
        continue;
      }
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      if (key == "count") continue;
      const std::string path = section.empty() ? key : section + "." + key;
      fields.emplace_back(path, line.substr(eq + 3));
    }
    for (const auto& [path, def] : fields)
      app.add_option("--" + path, given[path], "default " + def)->group("Scenario fields");
  }

  harness::Scenario build() const {
    harness::Scenario s = harness::default_scenario();
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw ConfigError("--scenario", "cannot open " + file);
      s = harness::parse_scenario(in);
    }
    if (stations > 0) s.sim.stations.resize(static_cast<std::size_t>(stations), s.sim.stations.at(0));
    for (const auto& [path, def] : fields) {
      const auto& v = given.at(path);
      if (!v.empty()) harness::set_field(s, path, v);
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set", "expected key=value, got " + kv);
      harness::set_field(s, kv.substr(0, eq), kv.substr(eq + 1));
    }
    harness::validate(s);
    return s;
  }
};

std::string stem(const harness::Scenario& s) { return s.name + "_" + harness::hash_hex(harness::scenario_hash(s)); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path.string(), "cannot write");
  out << text;
}

double column(const harness::MetricSummary& m, const std::string& name) {
  static const std::map<std::string, double harness::MetricSummary::*> cols = {
      {"goodput", &harness::MetricSummary::goodput},
      {"mean_delay", &harness::MetricSummary::mean_delay},
      {"p50_delay", &harness::MetricSummary::p50_delay},
      {"p95_delay", &harness::MetricSummary::p95_delay},
      {"p99_delay", &harness::MetricSummary::p99_delay},
      {"mean_agg", &harness::MetricSummary::mean_agg},
      {"jain", &harness::MetricSummary::jain},
      {"time_to_target", &harness::MetricSummary::time_to_target},
      {"agg_std", &harness::MetricSummary::agg_std},
      {"controlled_mean_agg", &harness::MetricSummary::controlled_mean_agg},
  };
  const auto it = cols.find(name);
  if (it == cols.end()) throw ConfigError(name, "unknown metric column");
  return m.*(it->second);
}

// Returns the number of failed assertions.
int report(const std::string& what, bool ok) {
  std::cerr << (ok ? "ok   " : "FAIL ") << what << "\n";
  return ok ? 0 : 1;
}

int cmd_run(const ScenarioArgs& sa, const std::string& out_dir, bool traces, bool expect_converged, double max_delay_ms, double min_jain, double min_goodput) {
  auto s = sa.build();
  if (traces) s.trace = {true, true};
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const std::string base = stem(s);
  write_file(dir / (base + ".scenario"), harness::print_scenario(s));

  std::string summary = harness::summary_csv_header();
  int failures = 0;
  for (auto seed : s.seeds) {
    const auto r = harness::run_closed_loop(s, seed);
    summary += harness::summary_csv_row(r.summary);
    const std::string tag = base + "_seed" + std::to_string(seed);

    std::string series = "tick,rate,mean_agg\n";
    for (std::size_t k = 0; k < r.control_series.size(); ++k) {
      series += std::to_string(k) + ",";
      if (k < r.rate_series.size()) series += std::to_string(r.rate_series[k]);
      series += ",";
      if (r.control_series[k]) series += std::to_string(*r.control_series[k]);
      series += "\n";
    }
    write_file(dir / (tag + "_series.csv"), series);
    if (traces) {
      std::ofstream p(dir / (tag + "_packets.csv"));
      sim::write_packets_csv(p, r.trace);
      std::ofstream f(dir / (tag + "_frames.csv"));
      sim::write_frames_csv(f, r.trace);
    }
    if (s.controller.enabled) {
      std::ofstream c(dir / (tag + "_controller.csv"));
      sim::write_controller_log_csv(c, r.trace);
    }

    const auto& m = r.summary;
    std::printf("seed %llu: goodput %.1f Mb/s (bound %.1f), mean delay %.3f ms, mean N %.2f, jain %.4f",
                static_cast<unsigned long long>(seed), m.goodput / 1e6, m.theory_goodput / 1e6, m.mean_delay * 1e3,
                m.mean_agg, m.jain);
    if (s.controller.enabled)
      std::printf(", converged %s, t_target %.2f s", m.converged ? "yes" : "no", m.time_to_target);
    std::printf("\n");

    const std::string who = "seed " + std::to_string(seed) + ": ";
    if (expect_converged) failures += report(who + "converged", m.converged);
    if (!std::isnan(max_delay_ms))
      failures += report(who + "mean delay <= " + std::to_string(max_delay_ms) + " ms", m.mean_delay * 1e3 <= max_delay_ms);
    if (!std::isnan(min_jain)) failures += report(who + "jain >= " + std::to_string(min_jain), m.jain >= min_jain);
    if (!std::isnan(min_goodput))
      failures += report(who + "goodput >= " + std::to_string(min_goodput), m.goodput >= min_goodput);
  }
  write_file(dir / (base + "_summary.csv"), summary);
  std::printf("wrote %s/%s_*\n", out_dir.c_str(), base.c_str());
  return failures;
}

int cmd_sweep(const ScenarioArgs& sa, const std::string& out_dir, const std::string& axis,
              const std::vector<std::string>& values, bool serial, const std::string& increasing,
              const std::string& decreasing, double tolerance) {
  const auto s = sa.build();
  const auto rows = serial ? harness::sweep_serial(s, axis, values) : harness::sweep(s, axis, values);
  fs::create_directories(out_dir);
  std::string table = harness::summary_csv_header();
  for (const auto& r : rows) table += harness::summary_csv_row(r.summary, r.axis_value);
  std::string safe_axis = axis;
  for (char& c : safe_axis)
    if (c == '[' || c == ']') c = '_';
  const fs::path path = fs::path(out_dir) / (stem(s) + "_sweep_" + safe_axis + ".csv");
  write_file(path, table);
  std::printf("%zu rows -> %s\n", rows.size(), path.string().c_str());

  // Means over seeds, in axis order.
  auto means = [&](const std::string& col) {
    std::vector<double> out;
    for (const auto& v : values) {
      double sum = 0;
      int n = 0;
      for (const auto& r : rows)
        if (r.axis_value == v) {
          sum += column(r.summary, col);
          ++n;
        }
      out.push_back(n ? sum / n : std::nan(""));
    }
    return out;
  };
  int failures = 0;
  if (!increasing.empty()) {
    const auto m = means(increasing);
    bool ok = true;
    for (std::size_t i = 1; i < m.size(); ++i) ok = ok && m[i] >= m[i - 1] - tolerance;
    failures += report(increasing + " non-decreasing along " + axis, ok);
  }
  if (!decreasing.empty()) {
    const auto m = means(decreasing);
    bool ok = true;
    for (std::size_t i = 1; i < m.size(); ++i) ok = ok && m[i] <= m[i - 1] + tolerance;
    failures += report(decreasing + " non-increasing along " + axis, ok);
  }
  return failures;
}

std::vector<double> mbps(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(x * 1e6);
  return out;
}

void write_ts_corpus(const std::string& dir, const std::vector<tsml::TsRun>& runs) {
  fs::create_directories(dir);
  for (const auto& r : runs) {
    const auto p = fs::path(dir) / ("ts_" + std::to_string(static_cast<int>(std::lround(r.rate / 1e6))) + "M_seed" +
                                    std::to_string(r.seed) + ".csv");
    std::ofstream out(p);
    tsml::write_ts_csv(out, r);
  }
  std::printf("wrote %zu corpus files to %s\n", runs.size(), dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregation-driven rate control: simulation, sweeps and models"};
  app.require_subcommand(1);
  int failures = 0;

  ScenarioArgs run_args, sweep_args;
  std::string out_dir = "out";

  auto* run = app.add_subcommand("run", "Run a scenario for each seed");
  run_args.attach(*run);
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  bool traces = false, expect_converged = false;
  double max_delay_ms = std::nan(""), min_jain = std::nan(""), min_goodput = std::nan("");
  run->add_flag("--traces", traces, "Write packet and frame traces");
  run->add_flag("--expect-converged", expect_converged, "Fail unless every seed converges")->group("Assertions");
  run->add_option("--max-mean-delay-ms", max_delay_ms, "Fail above this mean delay")->group("Assertions");
  run->add_option("--min-jain", min_jain, "Fail below this Jain index")->group("Assertions");
  run->add_option("--min-goodput", min_goodput, "Fail below this goodput, bits/s")->group("Assertions");
  run->callback([&] {
    failures += cmd_run(run_args, out_dir, traces, expect_converged, max_delay_ms, min_jain, min_goodput);
  });

  auto* sw = app.add_subcommand("sweep", "Sweep one field over a list of values");
  sweep_args.attach(*sw);
  sw->add_option("--out", out_dir, "Output directory")->capture_default_str();
  std::string axis, increasing, decreasing;
  std::vector<std::string> values;
  bool serial = false;
  double tolerance = 0.0;
  sw->add_option("--axis", axis, "Field path, e.g. station.send_rate")->required();
  sw->add_option("--values", values, "Comma separated values")->required()->delimiter(',');
  sw->add_flag("--serial", serial, "Run points one after another");
  sw->add_option("--expect-increasing", increasing, "Fail unless this column's seed mean never falls")
      ->group("Assertions");
  sw->add_option("--expect-decreasing", decreasing, "Fail unless this column's seed mean never rises")
      ->group("Assertions");
  sw->add_option("--tolerance", tolerance, "Slack for the monotonicity checks")->group("Assertions");
  sw->callback([&] {
    failures += cmd_sweep(sweep_args, out_dir, axis, values, serial, increasing, decreasing, tolerance);
  });

  // Boundary detector.
  auto* tl = app.add_subcommand("train-logit", "Train the frame boundary detector on simulated kernel timestamps");
  int m = 20, folds = 5;
  bool no_sigma = false;
  std::size_t rows_per_run = 4000;
  std::string model_path, corpus_dir;
  std::vector<double> ts_rates;
  std::vector<std::uint64_t> ts_seeds, test_seeds;
  double ts_duration = 0;
  tl->add_option("--m", m, "Inter-arrival window length")->capture_default_str();
  tl->add_flag("--no-sigma", no_sigma, "Drop the window standard deviation feature");
  tl->add_option("--rates", ts_rates, "Offered loads, Mb/s (default 50..800 step 50)")->delimiter(',');
  tl->add_option("--seeds", ts_seeds, "Training seeds (default 1,2)")->delimiter(',');
  tl->add_option("--duration", ts_duration, "Seconds per run");
  tl->add_option("--rows-per-run", rows_per_run, "Rows sampled from every run")->capture_default_str();
  tl->add_option("--folds", folds, "Cross-validation folds, 0 to skip")->capture_default_str();
  tl->add_option("--model", model_path, "Output model file")->required();
  tl->add_option("--test-corpus", corpus_dir, "Also write held-out corpus files here");
  tl->add_option("--test-seeds", test_seeds, "Seeds of the held-out corpus (default 100)")->delimiter(',');
  tl->callback([&] {
    auto spec = harness::default_boundary_corpus();
    if (!ts_rates.empty()) spec.rates = mbps(ts_rates);
    if (!ts_seeds.empty()) spec.seeds = ts_seeds;
    if (ts_duration > 0) spec.config.duration = ts_duration;
    const auto runs = harness::simulate_ts_runs(spec);
    const auto data = harness::boundary_training_set(runs, m, !no_sigma, rows_per_run);
    if (folds > 1) {
      const auto cv = ml::cross_validate_logistic(data.x, data.y, folds, 1);
      std::printf("%d-fold CV F1 %.4f +- %.4f\n", folds, cv.mean, cv.stddev);
    }
    const auto model = tsml::train_boundary(data, m, !no_sigma);
    ml::save_model(model_path, model.to_file());
    std::printf("trained on %lld rows -> %s\n", static_cast<long long>(data.x.rows()), model_path.c_str());
    if (!corpus_dir.empty()) {
      spec.seeds = test_seeds.empty() ? std::vector<std::uint64_t>{100} : test_seeds;
      write_ts_corpus(corpus_dir, harness::simulate_ts_runs(spec));
    }
  });

  // Aggregation corrector.
  auto* tr = app.add_subcommand("train-rbf", "Train the RBF aggregation corrector");
  std::string boundary_path, rbf_path;
  int d = 5, rbf_folds = 5;
  std::vector<double> gammas{0.01, 0.03, 0.1, 0.3, 1.0}, lambdas{1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> rbf_rates;
  std::vector<std::uint64_t> rbf_seeds{1, 2, 3};
  double rbf_duration = 2.2;
  tr->add_option("--boundary", boundary_path, "Boundary detector model")->required()->check(CLI::ExistingFile);
  tr->add_option("--d", d, "Slot history length")->capture_default_str();
  tr->add_option("--gammas", gammas, "Kernel widths")->delimiter(',')->capture_default_str();
  tr->add_option("--lambdas", lambdas, "Ridge penalties")->delimiter(',')->capture_default_str();
  tr->add_option("--folds", rbf_folds, "Cross-validation folds")->capture_default_str();
  tr->add_option("--rates", rbf_rates, "Offered loads, Mb/s (default 50..800 step 25)")->delimiter(',');
  tr->add_option("--seeds", rbf_seeds, "Training seeds")->delimiter(',')->capture_default_str();
  tr->add_option("--duration", rbf_duration, "Seconds per run")->capture_default_str();
  tr->add_option("--model", rbf_path, "Output model file")->required();
  tr->callback([&] {
    const auto boundary = tsml::BoundaryModel::from_file(ml::load_model(boundary_path));
    auto spec = harness::default_boundary_corpus();
    spec.config.duration = rbf_duration;
    spec.seeds = rbf_seeds;
    if (!rbf_rates.empty()) {
      spec.rates = mbps(rbf_rates);
    } else {
      spec.rates.clear();
      for (int r = 50; r <= 800; r += 25) spec.rates.push_back(r * 1e6);
    }
    const auto runs = harness::simulate_ts_runs(spec);
    const auto rows = harness::slot_rows(runs, boundary, d, spec.config.n_max);
    const auto t = harness::train_rbf_corrector(rows, d, spec.config.n_max, gammas, lambdas, rbf_folds, 1);
    for (const auto& g : t.grid) std::printf("gamma %-8g lambda %-8g cv rmse %.4f\n", g.gamma, g.lambda, g.cv_rmse);
    std::printf("best gamma %g lambda %g\n", t.best.gamma, t.best.lambda);
    const auto fit = harness::slot_rmse(rows, t.model);
    std::printf("training rmse raw %.3f corrected %.3f over %zu slots\n", fit.raw, fit.corrected, fit.n);
    ml::save_model(rbf_path, t.model.to_file());
  });

  // Bottleneck classifier.
  auto* tc = app.add_subcommand("train-clf", "Train the bottleneck classifier");
  int clf_n = 5, clf_p = 100, clf_folds = 20;
  std::vector<std::uint64_t> clf_seeds{1, 2}, clf_test_seeds{100};
  std::string clf_model, clf_corpus;
  tc->add_option("--n", clf_n, "Aggregation history length")->capture_default_str();
  tc->add_option("--p", clf_p, "Loss window, packets")->capture_default_str();
  tc->add_option("--seeds", clf_seeds, "Training seeds")->delimiter(',')->capture_default_str();
  tc->add_option("--folds", clf_folds, "Cross-validation folds, 0 to skip")->capture_default_str();
  tc->add_option("--model", clf_model, "Output model file")->required();
  tc->add_option("--test-corpus", clf_corpus, "Also write held-out corpus files here");
  tc->add_option("--test-seeds", clf_test_seeds, "Seeds of the held-out corpus")->delimiter(',')->capture_default_str();
  tc->callback([&] {
    const clf::ClfCorpusConfig config;
    const auto scenarios = clf::default_clf_scenarios();
    const auto traces = harness::simulate_clf_traces(config, scenarios, clf_seeds);
    const auto data = harness::clf_dataset(traces, clf_n, clf_p);
    if (clf_folds > 1) {
      const auto cv = ml::cross_validate_logistic(data.x, data.y, clf_folds, 1);
      std::printf("%d-fold CV F1 %.4f +- %.4f\n", clf_folds, cv.mean, cv.stddev);
    }
    const auto model = harness::train_clf_balanced(data, clf_n, clf_p, 1);
    ml::save_model(clf_model, model.to_file());
    std::printf("trained on %lld frames -> %s\n", static_cast<long long>(data.x.rows()), clf_model.c_str());
    if (!clf_corpus.empty()) {
      fs::create_directories(clf_corpus);
      const auto test = harness::simulate_clf_traces(config, scenarios, clf_test_seeds);
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto p = fs::path(clf_corpus) / ("clf_" + std::to_string(i) + "_seed" + std::to_string(test[i].seed) + ".csv");
        std::ofstream out(p);
        clf::write_clf_csv(out, clf::clf_features(test[i], clf_n, clf_p), clf_n, clf::describe(test[i].scenario));
      }
      std::printf("wrote %zu corpus files to %s\n", test.size(), clf_corpus.c_str());
    }
  });

  // Scoring.
  auto* ev = app.add_subcommand("eval", "Score saved models on corpus files");
  std::vector<std::string> models, corpora;
  std::string eval_out;
  double min_f1 = std::nan(""), max_rmse = std::nan("");
  ev->add_option("--model", models, "Model files")->required()->check(CLI::ExistingFile);
  ev->add_option("--corpus", corpora, "Corpus files or directories")->required()->check(CLI::ExistingPath);
  ev->add_option("--out", eval_out, "CSV output file (default stdout)");
  ev->add_option("--min-f1", min_f1, "Fail when a pooled F1 falls below this")->group("Assertions");
  ev->add_option("--max-rmse", max_rmse, "Fail when a pooled corrected RMSE exceeds this")->group("Assertions");
  ev->callback([&] {
    std::vector<std::string> files;
    for (const auto& c : corpora) {
      if (fs::is_directory(c)) {
        std::vector<std::string> in_dir;
        for (const auto& e : fs::directory_iterator(c))
          if (e.path().extension() == ".csv") in_dir.push_back(e.path().string());
        std::sort(in_dir.begin(), in_dir.end());
        files.insert(files.end(), in_dir.begin(), in_dir.end());
      } else {
        files.push_back(c);
      }
    }
    const auto rows = harness::eval_models(models, files);
    const auto csv = harness::eval_csv(rows);
    if (eval_out.empty())
      std::cout << csv;
    else
      write_file(eval_out, csv);
    for (const auto& r : rows) {
      if (r.corpus != "*") continue;
      const std::string who = r.model + " [" + r.level + "]: ";
      if (!std::isnan(min_f1) && !std::isnan(r.f1))
        failures += report(who + "F1 " + std::to_string(r.f1) + " >= " + std::to_string(min_f1), r.f1 >= min_f1);
      if (!std::isnan(max_rmse) && !std::isnan(r.rmse))
        failures += report(who + "rmse " + std::to_string(r.rmse) + " <= " + std::to_string(max_rmse), r.rmse <= max_rmse);
    }
  });

  auto* pd = app.add_subcommand("print-defaults", "Print the default scenario");
  bool keys = false;
  pd->add_flag("--keys", keys, "List field paths instead");
  pd->callback([&] {
    if (!keys) {
      std::cout << harness::print_scenario(harness::default_scenario());
      return;
    }
    ScenarioArgs probe;
    CLI::App scratch;
    probe.attach(scratch);
    for (const auto& [path, def] : probe.fields) std::cout << path << " = " << def << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return failures ? 1 : 0;
}
