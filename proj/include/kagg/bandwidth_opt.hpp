#pragma once

#include "kagg/aggregation.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

namespace kagg {

class PairGeometry;

/// Something that maps a bandwidth to a validation loss for a scheme family.
class BandwidthObjective {
 public:
  virtual ~BandwidthObjective() = default;
  virtual double value(double h) const = 0;
  virtual const WeightScheme& family() const = 0;
  virtual std::size_t models() const = 0;
  /// Same data and split, different scheme family (e.g. another alpha).
  virtual std::unique_ptr<BandwidthObjective> rebind(const WeightScheme& family) const = 0;
};

struct ValueAndGradient {
  double value = 0.0;
  double gradient = 0.0;
};

/// kappa-fold cross-validation error over the aggregation rows:
///
///   phi(h) = (1/kappa) sum_p sum_{j in F_p} (g_{-p}(r(X_j)) - Y_j)^2
///
/// where g_{-p} aggregates only rows outside fold p. Fold membership is fixed at
/// construction, so phi is a deterministic function of h. Query rows are evaluated
/// in parallel; per-fold partial sums are accumulated in row order and folds are
/// summed in index order, so the result does not depend on the thread count.
class CvObjective final : public BandwidthObjective {
 public:
  /// Seeded shuffle followed by round-robin fold assignment.
  CvObjective(PredictionMatrix pm, WeightScheme family, std::size_t folds = 5,
              std::uint64_t seed = 0, ZeroMassPolicy policy = ZeroMassPolicy::ResponseMean);
  /// Explicit fold label per row (labels 0..kappa-1, every fold non-empty).
  CvObjective(PredictionMatrix pm, WeightScheme family, std::vector<std::size_t> fold_of_row,
              ZeroMassPolicy policy = ZeroMassPolicy::ResponseMean);

  double value(double h) const override;
  const WeightScheme& family() const override { return family_; }
  std::size_t models() const override { return pm_->models(); }
  std::unique_ptr<BandwidthObjective> rebind(const WeightScheme& family) const override;
  CvObjective with_family(const WeightScheme& family) const;

  /// phi and dphi/dh in one pass. Needs a gaussian/exp4 KernelVector with multiplicative bandwidth.
  ValueAndGradient value_and_gradient(double h) const;

  /// Serial fold-by-fold evaluation through combine(); reference for value().
  double value_reference(double h) const;
  /// Serial evaluation of the pairwise (Y_i - Y_q) double-sum gradient; reference for
  /// value_and_gradient(). Cubic in the fold size.
  double gradient_reference(double h) const;

  const PredictionMatrix& prediction_matrix() const { return *pm_; }
  const std::vector<std::size_t>& fold_of_row() const { return fold_; }
  std::size_t folds() const { return n_folds_; }
  ZeroMassPolicy policy() const { return policy_; }

 private:
  void init();

  std::shared_ptr<const PredictionMatrix> pm_;
  WeightScheme family_;
  std::vector<std::size_t> fold_;
  std::size_t n_folds_ = 0;
  ZeroMassPolicy policy_;
  std::vector<double> fold_train_mean_;
  std::shared_ptr<const PairGeometry> geometry_;
};

/// Hold-out error: aggregate on `fit_rows`, average squared error on `validation_rows`.
class HoldoutObjective final : public BandwidthObjective {
 public:
  HoldoutObjective(PredictionMatrix fit_rows, PredictionMatrix validation_rows, WeightScheme family,
                   ZeroMassPolicy policy = ZeroMassPolicy::ResponseMean);

  double value(double h) const override;
  const WeightScheme& family() const override { return family_; }
  std::size_t models() const override { return fit_->models(); }
  std::unique_ptr<BandwidthObjective> rebind(const WeightScheme& family) const override;

  double value_reference(double h) const;

 private:
  std::shared_ptr<const PredictionMatrix> fit_;
  std::shared_ptr<const PredictionMatrix> validation_;
  WeightScheme family_;
  ZeroMassPolicy policy_;
  std::shared_ptr<const PairGeometry> geometry_;
};

double cv_error(const CvObjective& objective, double h);

struct AnalyticGradient {};
struct NumericalGradient {
  double step = 0.0;  ///< 0: use 1e-5 * max(h, 1)
};
using GradMode = std::variant<AnalyticGradient, NumericalGradient>;

/// dphi/dh. Analytic mode throws NotDifferentiable for kernels without a closed form;
/// numerical mode is the central difference (phi(h+s) - phi(h-s)) / 2s.
double cv_grad(const CvObjective& objective, double h, const GradMode& mode);

// ---------------------------------------------------------------------------
// Gradient descent
// ---------------------------------------------------------------------------

struct GdConfig {
  double h0 = 1.0;
  double learning_rate = 0.1;
  double threshold = 1e-6;  ///< stop once |dphi/dh| <= threshold
  std::size_t max_iter = 300;
  GradMode grad_mode = AnalyticGradient{};
  std::size_t max_halvings = 20;  ///< step halvings allowed when phi would increase
  double lr_growth = 2.0;         ///< rate multiplier after each accepted step (1 = fixed rate)
  double floor = 1e-8;            ///< iterates are projected onto [floor, inf)

  void validate() const;
};

enum class StopReason { Converged, MaxIter, Projected };
std::string_view stop_reason_name(StopReason reason);

struct GdStep {
  double h = 0.0;
  double value = 0.0;
  double gradient = 0.0;
  double learning_rate = 0.0;  ///< rate used to reach this h (0 for the start point)
  bool projected = false;
};

struct GdResult {
  double h_star = 0.0;
  std::vector<GdStep> trace;  ///< trace.front() is h0, trace.back() is h_star
  StopReason stop = StopReason::MaxIter;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

/// Non-finite objective or gradient during descent. Carries the trace up to that point.
class GdDiverged : public std::runtime_error {
 public:
  GdDiverged(const std::string& what, std::vector<GdStep> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<GdStep>& trace() const { return trace_; }

 private:
  std::vector<GdStep> trace_;
};

using ValueGradFn = std::function<ValueAndGradient(double)>;

/// h_k = h_{k-1} - lr_k * dphi/dh(h_{k-1}) while |dphi/dh| > threshold, for at most
/// max_iter steps. A step that increases phi is retried with half the rate. Each
/// accepted step multiplies the rate by lr_growth.
GdResult fit_bandwidth_gd(const ValueGradFn& objective, const GdConfig& config);

/// Refuses (NotDifferentiable) schemes whose loss is not smooth in h: cobra variants
/// and compactly supported kernels.
GdResult fit_bandwidth_gd(const CvObjective& objective, const GdConfig& config);

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

enum class Spacing { Linear, Logarithmic };

struct GridConfig {
  double h_min = 1e-10;
  double h_max = 10.0;
  std::size_t points = 500;
  Spacing spacing = Spacing::Linear;

  void validate() const;
  std::vector<double> nodes() const;
};

struct GridResult {
  double h_star = 0.0;
  double best_value = 0.0;
  std::size_t best_index = 0;
  std::vector<double> nodes;
  std::vector<double> curve;
};

/// Evaluates every node; ties resolve to the smallest h.
GridResult fit_bandwidth_grid(const std::function<double(double)>& objective, const GridConfig& grid);
GridResult fit_bandwidth_grid(const BandwidthObjective& objective, const GridConfig& grid);

/// Argmin of a curve with ties to the lowest index.
std::size_t argmin_first(const std::vector<double>& curve);

struct AlphaGridResult {
  double alpha_star = 1.0;
  double h_star = 0.0;
  double best_value = 0.0;
  std::vector<double> alphas;              ///< descending: 1, (M-1)/M, ..., 1/M
  std::vector<std::vector<double>> table;  ///< table[a][node]
  std::vector<double> nodes;
};

/// Joint search over alpha in {1/M, ..., 1} and the bandwidth grid for a cobra family.
/// Ties resolve to the larger alpha, then the smaller h.
AlphaGridResult fit_alpha_grid(const BandwidthObjective& objective, const GridConfig& grid,
                               std::size_t models);

}  // namespace kagg
