#pragma once

#include "kagg/experiment_config.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kagg {

enum class ColumnBlock { Learner, Scheme };
std::string_view block_name(ColumnBlock block);

/// One learner or scheme across the successful replications.
struct ResultColumn {
  std::string name;
  ColumnBlock block = ColumnBlock::Learner;
  std::vector<double> values;             ///< test metric, one per replication
  std::vector<double> bandwidths;         ///< tuned h (schemes only)
  std::vector<double> alphas;             ///< tuned alpha (cobra-relaxed only)
  std::vector<double> optimizer_seconds;  ///< tuning wall time (schemes only)

  double mean() const;
  /// Sample standard deviation across replications. Shown in brackets in tables.
  double sd() const;
  /// sd / sqrt(R).
  double se() const;
};

struct ResultTable {
  std::string source;
  std::string metric = "mse";
  std::vector<std::size_t> replications;  ///< indices of the replications that succeeded
  std::size_t failed = 0;
  std::vector<ResultColumn> columns;       ///< learners in config order, then schemes
  std::vector<double> replication_seconds;
  bool include_timings = false;

  const ResultColumn& column(const std::string& name) const;
  /// Throws std::logic_error when column lengths disagree or a stored value is not finite.
  void check() const;
};

/// Everything a replication needs after the base machines are fitted.
struct ReplicationData {
  DataSplit split;
  std::vector<BaseLearner> learners;
  PredictionMatrix aggregation;  ///< predictions on D_l with its responses
  Matrix test_predictions;       ///< predictions on the test rows
};

/// base seed + r. Every random choice inside the replication derives from this value.
std::uint64_t replication_seed(const ExperimentConfig& cfg, std::size_t replication);

/// Loads a CSV source once; returns nullopt for synthetic sources.
std::optional<Dataset> load_source(const ExperimentConfig& cfg);

/// Draw (or resplit) the data and fit the learners for one replication.
ReplicationData prepare_replication(const ExperimentConfig& cfg, const Dataset* loaded,
                                    std::size_t replication);

struct TunedScheme {
  WeightScheme scheme;  ///< family with the selected bandwidth (and alpha)
  OptimizerKind optimizer = OptimizerKind::Grid;
  std::optional<GdResult> gd;
  std::optional<GridResult> grid;
  std::optional<AlphaGridResult> alpha_grid;
  double seconds = 0.0;
};

/// Kernel schemes minimise the fold CV error over D_l; cobra schemes minimise a
/// hold-out error with D_l split into two halves.
TunedScheme tune_scheme(const ExperimentConfig& cfg, const SchemeConfig& scheme,
                        const PredictionMatrix& aggregation, std::uint64_t seed);

/// Replications run in parallel; each is independent and results are gathered by index.
/// A failed replication is logged and dropped. More than 10% failures throws
/// FailureThresholdExceeded.
ResultTable run_experiment(const ExperimentConfig& cfg);

struct OptimizerTiming {
  std::size_t replication = 0;
  double gd_seconds = 0.0;
  double grid_seconds = 0.0;
  double gd_h = 0.0;
  double grid_h = 0.0;
  double gd_cv_error = 0.0;
  double grid_cv_error = 0.0;
  std::size_t gd_iterations = 0;
  std::size_t grid_points = 0;
};

/// Gradient descent and grid search on the same CV objective of one replication.
/// Uses the first differentiable scheme of `cfg`, or a multiplicative gaussian kernel.
OptimizerTiming time_optimizers(const ExperimentConfig& cfg, std::size_t replication = 0);
OptimizerTiming time_optimizers(const CvObjective& objective, const GdConfig& gd, const GridConfig& grid);

}  // namespace kagg
