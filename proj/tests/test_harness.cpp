#include "kagg/errors.hpp"
#include "kagg/harness.hpp"
#include "kagg/metrics.hpp"
#include "kagg/parallel.hpp"
#include "kagg/results_io.hpp"
#include "kagg/validation.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kagg;

namespace {

ExperimentConfig small_config(std::size_t reps = 2) {
  return parse_experiment_config(R"({
    "source": {"model": 1, "n": 120},
    "learners": ["knn", {"type": "tree", "min_leaf": 3}],
    "schemes": ["cobra", {"type": "kernel", "kernel": "gaussian"}],
    "optimizer": {"grid": {"min": 0.01, "max": 10, "points": 30}},
    "replications": )" + std::to_string(reps) + R"(,
    "seed": 11
  })");
}

std::string to_json(const ResultTable& t) {
  std::ostringstream out;
  write_results_json(out, t);
  return out.str();
}

}  // namespace

TEST_CASE("metrics on small examples") {
  const std::vector<double> pred{0.0, 0.0}, truth{1.0, 3.0};
  CHECK(metric_mse(pred, truth) == 5.0);
  CHECK(metric_rmse(pred, truth) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(v) == 2.5);
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(median(v) == 2.5);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  const std::vector<double> one{7.0};
  CHECK(sample_sd(one) == 0.0);
  CHECK_THROWS_AS(metric_mse(one, truth), InvalidArgument);
  CHECK_THROWS_AS(metric_mse(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("config parsing: defaults and overrides") {
  const ExperimentConfig cfg = parse_experiment_config(R"({
    "source": {"type": "synthetic", "model": 3, "regime": "correlated"},
    "learners": ["ridge", "lasso", {"type": "knn", "k": 7}, "tree", {"type": "rf", "n_trees": 50}],
    "schemes": [
      "cobra",
      {"type": "cobra-relaxed"},
      {"type": "cobra-relaxed", "alpha": 0.6, "name": "cobra-0.6"},
      {"type": "kernel", "kernel": "exp4", "name": "e4"},
      {"type": "kernel", "kernel": "epanechnikov"},
      {"type": "kernel-percoord", "kernel": "gaussian", "optimizer": {"optimizer": "grid", "folds": 3}}
    ],
    "optimizer": {"h0": 2.0, "lr": 0.05, "grid": {"points": 50, "spacing": "log", "min": 0.001}},
    "split": {"test_fraction": 0.25},
    "replications": 7,
    "seed": 123,
    "metric": "rmse",
    "strict_zero_fallback": true
  })");
  const auto& s = std::get<SyntheticSource>(cfg.source);
  CHECK(s.model.id == 3);
  CHECK(s.model.regime == Regime::Correlated);
  CHECK(source_label(cfg.source) == "model3-correlated");
  CHECK(cfg.learners.size() == 5);
  CHECK(std::get<KnnParams>(cfg.learners[2]).k == 7);
  CHECK(std::get<ForestParams>(cfg.learners[4]).n_trees == 50);
  REQUIRE(cfg.schemes.size() == 6);
  CHECK(cfg.schemes[0].label == "cobra");
  CHECK(cfg.schemes[1].tune_alpha);
  CHECK_FALSE(cfg.schemes[2].tune_alpha);
  CHECK(std::get<CobraRelaxed>(cfg.schemes[2].family).alpha == 0.6);
  CHECK(cfg.schemes[3].label == "e4");
  CHECK(std::get<KernelVector>(cfg.schemes[3].family).bw.param == Parametrization::Multiplicative);
  CHECK(cfg.schemes[4].label == "kernel-epanechnikov");
  CHECK(std::get<KernelVector>(cfg.schemes[4].family).bw.param == Parametrization::Divisive);
  CHECK(cfg.schemes[5].label == "kernel-percoord-gaussian");
  CHECK(cfg.optimizer.gd.h0 == 2.0);
  CHECK(cfg.optimizer.gd.learning_rate == 0.05);
  CHECK(cfg.optimizer.grid.points == 50);
  CHECK(cfg.optimizer.grid.spacing == Spacing::Logarithmic);
  CHECK(cfg.optimizer.grid.h_max == 10.0);
  CHECK(cfg.split.test_fraction == 0.25);
  CHECK(cfg.replications == 7);
  CHECK(cfg.seed == 123);
  CHECK(cfg.metric == Metric::Rmse);
  CHECK(cfg.zero_mass == ZeroMassPolicy::Zero);

  CHECK(cfg.optimizer_for(cfg.schemes[0]).kind == OptimizerKind::Grid);
  CHECK(cfg.optimizer_for(cfg.schemes[3]).kind == OptimizerKind::Gd);
  CHECK(cfg.optimizer_for(cfg.schemes[4]).kind == OptimizerKind::Grid);
  const ResolvedOptimizer percoord = cfg.optimizer_for(cfg.schemes[5]);
  CHECK(percoord.kind == OptimizerKind::Grid);
  CHECK(percoord.config.folds == 3);
  CHECK(percoord.config.gd.h0 == 2.0);  // scheme block inherits the experiment-wide values
}

TEST_CASE("config parsing rejects bad input") {
  const char* bad[] = {
      "{",
      R"({"learners": ["knn"], "schemes": ["cobra"]})",
      R"({"source": {"model": 11}, "learners": ["knn"], "schemes": ["cobra"]})",
      R"({"source": {"model": 1}, "learners": ["svm"], "schemes": ["cobra"]})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": ["cobra"], "colour": 1})",
      R"({"source": {"model": 1}, "learners": [{"type": "knn", "kk": 3}], "schemes": ["cobra"]})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": [{"type": "kernel", "kernel": "cauchy"}]})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": ["cobra"], "optimizer": {"optimizer": "gd"}})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": [{"type": "kernel", "kernel": "biweight", "parametrization": "multiplicative"}]})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": ["cobra"], "optimizer": {"folds": 1}})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": ["cobra"], "seed": -4})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": ["cobra"], "split": {"test_fraction": 1.5}})",
      R"({"source": {"model": 1}, "learners": ["knn", "knn"], "schemes": ["cobra"]})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": [{"type": "cobra", "kernel": "gaussian"}]})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": [{"type": "cobra-relaxed", "alpha": 0.7}]})",
      R"({"source": {"model": 1}, "learners": ["knn"], "schemes": ["cobra"], "metric": "mae"})",
      R"({"source": {"model": 1}, "learners": [], "schemes": ["cobra"]})",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_experiment_config(text), InvalidConfig);
  }
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), InvalidConfig);
}

TEST_CASE("default experiment") {
  const ExperimentConfig cfg = default_experiment({1, Regime::Uncorrelated});
  CHECK(cfg.learners.size() == 5);
  REQUIRE(cfg.schemes.size() == 2);
  CHECK(cfg.schemes[0].label == "cobra");
  CHECK(cfg.schemes[1].label == "kernel-gaussian");
  CHECK(scheme_is_differentiable(cfg.schemes[1].family));
  CHECK_FALSE(scheme_is_differentiable(cfg.schemes[0].family));
  CHECK(cfg.replications == 20);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("a small experiment runs end to end") {
  const ExperimentConfig cfg = small_config(2);
  const ResultTable t = run_experiment(cfg);
  CHECK(t.source == "model1-uncorrelated");
  CHECK(t.replications == std::vector<std::size_t>{0, 1});
  CHECK(t.failed == 0);
  REQUIRE(t.columns.size() == 4);
  CHECK(t.columns[0].name == "knn");
  CHECK(t.columns[0].block == ColumnBlock::Learner);
  CHECK(t.columns[2].name == "cobra");
  CHECK(t.columns[3].name == "kernel-gaussian");
  CHECK(t.columns[3].block == ColumnBlock::Scheme);
  for (const auto& c : t.columns) {
    CHECK(c.values.size() == 2);
    for (double v : c.values) CHECK(std::isfinite(v));
    CHECK(c.se() == doctest::Approx(c.sd() / std::sqrt(2.0)));
  }
  CHECK(t.columns[3].bandwidths.size() == 2);
  CHECK(t.column("cobra").bandwidths.size() == 2);
  CHECK_THROWS(t.column("missing"));
}

TEST_CASE("replication outcome does not depend on the thread count") {
  ExperimentConfig cfg = small_config(3);
  const int saved = max_threads();
  cfg.threads = 1;
  const std::string one = to_json(run_experiment(cfg));
  cfg.threads = 4;
  const std::string four = to_json(run_experiment(cfg));
  set_threads(saved);
  CHECK(one == four);
  cfg.threads = 0;
  CHECK(to_json(run_experiment(cfg)) == one);

  cfg.seed = 12;
  CHECK(to_json(run_experiment(cfg)) != one);
}

TEST_CASE("replication r alone reproduces its column of the full run") {
  ExperimentConfig cfg = small_config(3);
  const ResultTable all = run_experiment(cfg);
  cfg.seed = replication_seed(cfg, 2);
  cfg.replications = 1;
  const ResultTable last = run_experiment(cfg);
  for (std::size_t c = 0; c < all.columns.size(); ++c) CHECK(last.columns[c].values[0] == all.columns[c].values[2]);
}

TEST_CASE("result files: csv round trip, json, markdown layout") {
  const ResultTable t = run_experiment(small_config(2));

  std::ostringstream csv;
  write_results_csv(csv, t);
  std::istringstream in(csv.str());
  const ResultTable back = parse_results_csv(in);
  std::ostringstream again;
  write_results_csv(again, back);
  CHECK(again.str() == csv.str());
  CHECK(csv.str().rfind("source,column,block,metric,mean,sd,se,rep_0,rep_1\n", 0) == 0);
  for (std::size_t c = 0; c < t.columns.size(); ++c) CHECK(back.columns[c].values == t.columns[c].values);

  std::istringstream tampered(std::string(csv.str()).replace(csv.str().find(",mse,") + 5, 1, "9"));
  CHECK_THROWS(parse_results_csv(tampered));

  const std::string json = to_json(t);
  CHECK(json.find("\"timings\"") == std::string::npos);
  CHECK(json.find("\"kernel-gaussian\"") != std::string::npos);

  std::ostringstream md;
  write_results_markdown(md, std::span<const ResultTable>(&t, 1));
  const std::string text = md.str();
  CHECK(text.find("| source | knn | tree | | cobra | kernel-gaussian |") != std::string::npos);
  CHECK(text.find("model1-uncorrelated (R=2)") != std::string::npos);
  const std::string cell = format_summary(t.columns[0].mean()) + " (" + format_summary(t.columns[0].sd()) + ")";
  CHECK(text.find(cell) != std::string::npos);

  CHECK(parse_format("md") == OutputFormat::Markdown);
  CHECK(parse_format("csv") == OutputFormat::Csv);
  CHECK_THROWS_AS(parse_format("xml"), InvalidConfig);
  CHECK(format_summary(0.0123456789) == "0.0123457");
}

TEST_CASE("emitting an empty table fails before anything is written") {
  ResultTable empty;
  empty.source = "x";
  const auto path = std::filesystem::temp_directory_path() / "kagg_empty_table.csv";
  std::filesystem::remove(path);
  CHECK_THROWS_AS(emit_results(empty, OutputFormat::Csv, path), InvalidArgument);
  CHECK_FALSE(std::filesystem::exists(path));
  std::ostringstream out;
  CHECK_THROWS_AS(emit_results(empty, OutputFormat::Json, out), InvalidArgument);
  CHECK(out.str().empty());

  const ResultTable t = run_experiment(small_config(1));
  CHECK_THROWS_AS(emit_results(t, OutputFormat::Csv, "/nonexistent/dir/out.csv"), std::runtime_error);
  emit_results(t, OutputFormat::Json, path);
  CHECK(std::filesystem::file_size(path) > 0);
  std::filesystem::remove(path);
}

TEST_CASE("split sizes too small for the folds are a config error") {
  ExperimentConfig cfg = small_config(1);
  std::get<SyntheticSource>(cfg.source).n = 10;  // 4 aggregation rows
  CHECK_THROWS_AS(run_experiment(cfg), InvalidConfig);
}

TEST_CASE("too many failed replications abort the run") {
  const auto path = std::filesystem::temp_directory_path() / "kagg_overflow.csv";
  {
    std::ofstream out(path);
    out << "x,y\n";
    for (int i = 0; i < 40; ++i) out << i << "," << (i % 2 == 0 ? "1e200" : "-1e200") << "\n";
  }
  ExperimentConfig cfg = small_config(3);
  cfg.source = CsvSource{path, "y", {}, ','};
  CHECK_THROWS_AS(run_experiment(cfg), FailureThresholdExceeded);
  std::filesystem::remove(path);
}

TEST_CASE("csv sources load and run") {
  ExperimentConfig cfg = small_config(1);
  cfg.source = CsvSource{std::filesystem::path(KAGG_TEST_DATA_DIR) / "wine_sample.csv", "quality", {}, ';'};
  CHECK(source_label(cfg.source) == "wine_sample");
  const auto data = load_source(cfg);
  REQUIRE(data.has_value());
  CHECK(data->dims() == 11);
  // six rows leave two aggregation rows, too few for five folds
  CHECK_THROWS_AS(run_experiment(cfg), InvalidConfig);
  cfg.source = CsvSource{"/nonexistent.csv", "y", {}, ','};
  CHECK_THROWS_AS(run_experiment(cfg), InvalidConfig);
}

TEST_CASE("optimizer timing on a fixed objective") {
  const ExperimentConfig cfg = small_config(1);
  const ReplicationData rep = prepare_replication(cfg, nullptr, 0);
  CHECK(rep.aggregation.rows() == rep.split.train_l.rows());
  CHECK(static_cast<std::size_t>(rep.test_predictions.rows()) == rep.split.test.rows());
  const CvObjective cv(rep.aggregation, KernelVector{KernelSpec{}, Bandwidth{1.0, Parametrization::Multiplicative}}, 5, 0);
  GdConfig gd;
  gd.threshold = 1e9;
  const OptimizerTiming t = time_optimizers(cv, gd, GridConfig{0.5, 2.0, 2});
  CHECK(t.gd_h == 1.0);
  CHECK(t.gd_iterations == 0);
  CHECK(t.grid_points == 2);
  CHECK(t.gd_cv_error == cv.value(1.0));
  CHECK(t.grid_cv_error == std::min(cv.value(0.5), cv.value(2.0)));
  CHECK(t.gd_seconds >= 0.0);

  const OptimizerTiming whole = time_optimizers(cfg, 0);
  CHECK(whole.gd_cv_error <= 1.05 * whole.grid_cv_error);
}

TEST_CASE("built-in validation suite passes") {
  for (const CheckResult& r : run_validation_suite(7, 5)) {
    CAPTURE(r.name);
    CAPTURE(r.detail);
    CHECK(r.passed);
  }
}
