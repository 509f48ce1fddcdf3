#include "kagg/harness.hpp"

#include "kagg/csv.hpp"
#include "kagg/errors.hpp"
#include "kagg/metrics.hpp"
#include "kagg/parallel.hpp"
#include "kagg/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace kagg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Streams under a replication seed.
constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kLearnerStream = 2;
constexpr std::uint64_t kSchemeStreamBase = 16;

double score(Metric metric, std::span<const double> pred, std::span<const double> truth) {
  return metric == Metric::Mse ? metric_mse(pred, truth) : metric_rmse(pred, truth);
}

}  // namespace

std::string_view block_name(ColumnBlock block) {
  return block == ColumnBlock::Learner ? "learners" : "schemes";
}

double ResultColumn::mean() const { return kagg::mean(values); }
double ResultColumn::sd() const { return sample_sd(values); }
double ResultColumn::se() const {
  return values.empty() ? 0.0 : sd() / std::sqrt(static_cast<double>(values.size()));
}

const ResultColumn& ResultTable::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no result column '" + name + "'");
}

void ResultTable::check() const {
  const std::size_t r = replications.size();
  bool schemes_started = false;
  for (const auto& c : columns) {
    if (c.values.size() != r) throw std::logic_error("column '" + c.name + "' has the wrong length");
    if (c.block == ColumnBlock::Scheme) {
      schemes_started = true;
      if (c.bandwidths.size() != r) throw std::logic_error("column '" + c.name + "' lacks bandwidths");
    } else if (schemes_started) {
      throw std::logic_error("learner column '" + c.name + "' after a scheme column");
    }
    for (double v : c.values) {
      if (!std::isfinite(v)) throw std::logic_error("column '" + c.name + "' holds a non-finite value");
    }
  }
}

std::uint64_t replication_seed(const ExperimentConfig& cfg, std::size_t replication) {
  return cfg.seed + replication;
}

std::optional<Dataset> load_source(const ExperimentConfig& cfg) {
  const auto* c = std::get_if<CsvSource>(&cfg.source);
  if (c == nullptr) return std::nullopt;
  CsvLoadOptions opts;
  opts.delimiter = c->delimiter;
  CsvLoadResult loaded;
  try {
    loaded = load_csv(c->path, c->target, c->features, opts);
  } catch (const InvalidArgument& e) {
    throw InvalidConfig(e.what());
  } catch (const std::ios_base::failure& e) {
    throw InvalidConfig(e.what());
  }
  if (loaded.dropped_rows > 0) {
    std::clog << "kagg: dropped " << loaded.dropped_rows << " rows with missing values from "
              << c->path.string() << "\n";
  }
  return std::move(loaded.data);
}

ReplicationData prepare_replication(const ExperimentConfig& cfg, const Dataset* loaded,
                                    std::size_t replication) {
  const std::uint64_t seed = replication_seed(cfg, replication);
  Dataset data;
  if (const auto* s = std::get_if<SyntheticSource>(&cfg.source)) {
    const std::size_t n = s->n.value_or(model_shape(s->model.id).n);
    data = gen_model(s->model, n, derive_seed(seed, kDataStream)).data;
  } else {
    if (loaded == nullptr) throw std::logic_error("csv source used without loaded data");
    data = *loaded;
  }
  SplitSpec spec = cfg.split;
  spec.seed = derive_seed(seed, kSplitStream);

  ReplicationData out;
  out.split = split(data, spec);
  const std::uint64_t learner_seed = derive_seed(seed, kLearnerStream);
  out.learners.reserve(cfg.learners.size());
  for (std::size_t m = 0; m < cfg.learners.size(); ++m) {
    out.learners.push_back(BaseLearner::fit(cfg.learners[m], out.split.train_k, derive_seed(learner_seed, m)));
  }
  out.aggregation = PredictionMatrix{predict_all(out.learners, out.split.train_l.features),
                                     out.split.train_l.responses};
  out.test_predictions = predict_all(out.learners, out.split.test.features);
  return out;
}

TunedScheme tune_scheme(const ExperimentConfig& cfg, const SchemeConfig& scheme,
                        const PredictionMatrix& aggregation, std::uint64_t seed) {
  const ResolvedOptimizer opt = cfg.optimizer_for(scheme);
  TunedScheme out;
  out.optimizer = opt.kind;
  const auto start = Clock::now();

  const bool cobra = std::holds_alternative<CobraFull>(scheme.family) ||
                     std::holds_alternative<CobraRelaxed>(scheme.family);
  if (cobra) {
    std::vector<std::size_t> order(aggregation.rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t half = (order.size() + 1) / 2;
    std::vector<std::size_t> fit_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> val_rows(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    const HoldoutObjective objective(aggregation.subset(fit_rows), aggregation.subset(val_rows),
                                     scheme.family, cfg.zero_mass);
    if (scheme.tune_alpha) {
      out.alpha_grid = fit_alpha_grid(objective, opt.config.grid, aggregation.models());
      out.scheme = CobraRelaxed{out.alpha_grid->h_star, out.alpha_grid->alpha_star};
    } else {
      out.grid = fit_bandwidth_grid(objective, opt.config.grid);
      out.scheme = with_bandwidth(scheme.family, out.grid->h_star);
    }
  } else {
    const CvObjective objective(aggregation, scheme.family, opt.config.folds, seed, cfg.zero_mass);
    if (opt.kind == OptimizerKind::Gd) {
      out.gd = fit_bandwidth_gd(objective, opt.config.gd);
      if (out.gd->trace.empty() || out.gd->trace.back().h != out.gd->h_star) {
        throw std::logic_error("selected bandwidth differs from the last trace entry");
      }
      out.scheme = with_bandwidth(scheme.family, out.gd->h_star);
    } else {
      out.grid = fit_bandwidth_grid(objective, opt.config.grid);
      out.scheme = with_bandwidth(scheme.family, out.grid->h_star);
    }
  }
  out.seconds = seconds_since(start);
  return out;
}

namespace {

struct ReplicationOutcome {
  bool ok = false;
  std::string error;
  std::vector<double> values;  // learners then schemes
  std::vector<double> bandwidths;
  std::vector<double> alphas;
  std::vector<double> optimizer_seconds;
  double seconds = 0.0;
};

ReplicationOutcome run_replication(const ExperimentConfig& cfg, const Dataset* loaded, std::size_t r) {
  ReplicationOutcome out;
  const auto start = Clock::now();
  const ReplicationData rep = prepare_replication(cfg, loaded, r);
  const auto& truth = rep.split.test.responses;
  const std::span<const double> truth_span(truth.data(), static_cast<std::size_t>(truth.size()));
  const auto rows = rep.test_predictions.rows();

  for (std::size_t m = 0; m < cfg.learners.size(); ++m) {
    const Vector col = rep.test_predictions.col(static_cast<Eigen::Index>(m));
    out.values.push_back(score(cfg.metric, {col.data(), static_cast<std::size_t>(col.size())}, truth_span));
  }
  const std::uint64_t seed = replication_seed(cfg, r);
  for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
    const TunedScheme tuned = tune_scheme(cfg, cfg.schemes[s], rep.aggregation, derive_seed(seed, kSchemeStreamBase + s));
    std::vector<double> pred(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
      pred[static_cast<std::size_t>(i)] =
          combine(tuned.scheme, rep.aggregation, row_span(rep.test_predictions, i), cfg.zero_mass).value;
    }
    out.values.push_back(score(cfg.metric, pred, truth_span));
    out.bandwidths.push_back(scheme_bandwidth(tuned.scheme));
    const auto* relaxed = std::get_if<CobraRelaxed>(&tuned.scheme);
    out.alphas.push_back(relaxed ? relaxed->alpha : std::nan(""));
    out.optimizer_seconds.push_back(tuned.seconds);
  }
  for (double v : out.values) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite test error");
  }
  out.seconds = seconds_since(start);
  out.ok = true;
  return out;
}

void check_split_sizes(const ExperimentConfig& cfg, std::size_t n) {
  SplitIndices idx;
  try {
    idx = split_indices(n, cfg.split);
  } catch (const InvalidArgument& e) {
    throw InvalidConfig(e.what());
  }
  const std::size_t l = idx.train_l.size();
  for (const auto& s : cfg.schemes) {
    const bool cobra = std::holds_alternative<CobraFull>(s.family) || std::holds_alternative<CobraRelaxed>(s.family);
    if (cobra && l < 2) throw InvalidConfig("scheme '" + s.label + "' needs at least 2 aggregation rows");
    if (!cobra && cfg.optimizer_for(s).config.folds > l) {
      throw InvalidConfig("scheme '" + s.label + "': more folds than the " + std::to_string(l) +
                          " aggregation rows");
    }
  }
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::optional<Dataset> loaded = load_source(cfg);
  if (const auto* s = std::get_if<SyntheticSource>(&cfg.source)) {
    check_split_sizes(cfg, s->n.value_or(model_shape(s->model.id).n));
  } else {
    check_split_sizes(cfg, loaded->rows());
  }
  if (cfg.threads > 0) set_threads(cfg.threads);

  const std::size_t reps = cfg.replications;
  std::vector<ReplicationOutcome> outcomes(reps);
  const Dataset* data = loaded ? &*loaded : nullptr;
  const auto n_reps = static_cast<std::ptrdiff_t>(reps);
  // With fewer replications than threads the inner kernels get the threads instead.
  const bool outer = reps >= static_cast<std::size_t>(max_threads()) && max_threads() > 1;
#pragma omp parallel for schedule(dynamic, 1) if (outer)
  for (std::ptrdiff_t rr = 0; rr < n_reps; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    try {
      outcomes[r] = run_replication(cfg, data, r);
    } catch (const std::exception& e) {
      outcomes[r].ok = false;
      outcomes[r].error = e.what();
    }
  }

  ResultTable table;
  table.source = source_label(cfg.source);
  table.metric = std::string(metric_name(cfg.metric));
  table.include_timings = cfg.include_timings;
  for (const auto& l : cfg.learners) table.columns.push_back({learner_name(l), ColumnBlock::Learner, {}, {}, {}, {}});
  for (const auto& s : cfg.schemes) table.columns.push_back({s.label, ColumnBlock::Scheme, {}, {}, {}, {}});
  const std::size_t n_learners = cfg.learners.size();

  for (std::size_t r = 0; r < reps; ++r) {
    const auto& o = outcomes[r];
    if (!o.ok) {
      ++table.failed;
      std::clog << "kagg: replication " << r << " failed: " << o.error << "\n";
      continue;
    }
    table.replications.push_back(r);
    table.replication_seconds.push_back(o.seconds);
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      auto& col = table.columns[c];
      col.values.push_back(o.values[c]);
      if (c >= n_learners) {
        const std::size_t s = c - n_learners;
        col.bandwidths.push_back(o.bandwidths[s]);
        if (std::holds_alternative<CobraRelaxed>(cfg.schemes[s].family)) col.alphas.push_back(o.alphas[s]);
        col.optimizer_seconds.push_back(o.optimizer_seconds[s]);
      }
    }
  }
  if (table.failed * 10 > reps) {
    throw FailureThresholdExceeded(std::to_string(table.failed) + " of " + std::to_string(reps) +
                                   " replications failed");
  }
  table.check();
  return table;
}

OptimizerTiming time_optimizers(const CvObjective& objective, const GdConfig& gd, const GridConfig& grid) {
  OptimizerTiming out;
  auto start = Clock::now();
  const GdResult g = fit_bandwidth_gd(objective, gd);
  out.gd_seconds = seconds_since(start);
  start = Clock::now();
  const GridResult s = fit_bandwidth_grid(objective, grid);
  out.grid_seconds = seconds_since(start);
  out.gd_h = g.h_star;
  out.gd_cv_error = g.trace.back().value;
  out.gd_iterations = g.iterations;
  out.grid_h = s.h_star;
  out.grid_cv_error = s.best_value;
  out.grid_points = s.nodes.size();
  return out;
}

OptimizerTiming time_optimizers(const ExperimentConfig& cfg, std::size_t replication) {
  cfg.validate();
  if (cfg.threads > 0) set_threads(cfg.threads);
  const std::optional<Dataset> loaded = load_source(cfg);
  const ReplicationData rep = prepare_replication(cfg, loaded ? &*loaded : nullptr, replication);

  WeightScheme family = KernelVector{KernelSpec{KernelKind::Gaussian}, Bandwidth{1.0, Parametrization::Multiplicative}};
  OptimizerConfig opt = cfg.optimizer;
  for (const auto& s : cfg.schemes) {
    if (scheme_is_differentiable(s.family)) {
      family = s.family;
      opt = s.optimizer.value_or(cfg.optimizer);
      break;
    }
  }
  const CvObjective objective(rep.aggregation, family, opt.folds,
                              derive_seed(replication_seed(cfg, replication), kSchemeStreamBase), cfg.zero_mass);
  OptimizerTiming out = time_optimizers(objective, opt.gd, opt.grid);
  out.replication = replication;
  return out;
}

}  // namespace kagg
