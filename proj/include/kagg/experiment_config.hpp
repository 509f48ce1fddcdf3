#pragma once

#include "kagg/aggregation.hpp"
#include "kagg/bandwidth_opt.hpp"
#include "kagg/datagen.hpp"
#include "kagg/learners/base_learner.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace kagg {

struct SyntheticSource {
  SyntheticModelId model;
  std::optional<std::size_t> n;  ///< unset: the model's default size
};

struct CsvSource {
  std::filesystem::path path;
  std::string target;
  std::vector<std::string> features;  ///< empty: every numeric column except the target
  char delimiter = ',';
};

using DataSource = std::variant<SyntheticSource, CsvSource>;

/// Short label for tables: "model1-uncorrelated" or the CSV file stem.
std::string source_label(const DataSource& source);

enum class Metric { Mse, Rmse };
std::string_view metric_name(Metric metric);

/// Auto: gradient descent where the loss is differentiable in h, grid search otherwise.
enum class OptimizerKind { Auto, Gd, Grid };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Auto;
  GdConfig gd;
  GridConfig grid;
  std::size_t folds = 5;
};

struct SchemeConfig {
  std::string label;    ///< column name in result tables
  WeightScheme family;  ///< bandwidth value is ignored; it is tuned
  bool tune_alpha = false;  ///< cobra-relaxed without a fixed alpha
  std::optional<OptimizerConfig> optimizer;  ///< overrides the experiment-wide block
};

/// The optimizer a scheme actually runs with, after defaults are applied.
struct ResolvedOptimizer {
  OptimizerKind kind = OptimizerKind::Grid;  ///< Gd or Grid, never Auto
  OptimizerConfig config;
};

struct ExperimentConfig {
  DataSource source = SyntheticSource{};
  std::vector<LearnerSpec> learners;
  std::vector<SchemeConfig> schemes;
  OptimizerConfig optimizer;
  SplitSpec split;  ///< split.seed is unused; each replication derives its own
  std::size_t replications = 20;
  std::uint64_t seed = 0;
  Metric metric = Metric::Mse;
  ZeroMassPolicy zero_mass = ZeroMassPolicy::ResponseMean;
  int threads = 0;  ///< 0: OpenMP default
  bool include_timings = false;

  /// Throws InvalidConfig.
  void validate() const;
  ResolvedOptimizer optimizer_for(const SchemeConfig& scheme) const;
};

/// True when the scheme's CV loss has an analytic derivative in h.
bool scheme_is_differentiable(const WeightScheme& family);

/// Default column label: cobra, cobra-relaxed, or kernel-<name> / kernel-percoord-<name>.
std::string default_scheme_label(const WeightScheme& family);

/// Learners ridge, lasso, knn, tree, rf and the schemes cobra + gaussian kernel.
ExperimentConfig default_experiment(const SyntheticModelId& model);

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace kagg
