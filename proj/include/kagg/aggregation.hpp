#pragma once

#include "kagg/dataset.hpp"
#include "kagg/kernels.hpp"
#include "kagg/learners/base_learner.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace kagg {

/// Base-machine predictions r_k(X_i) on the aggregation rows (l x M) together with
/// the aligned responses Y_i.
struct PredictionMatrix {
  Matrix values;
  Vector responses;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t models() const { return static_cast<std::size_t>(values.cols()); }

  void validate() const;
  PredictionMatrix subset(std::span<const std::size_t> indices) const;
};

/// Unanimous agreement: weight_i ∝ prod_m 1{|r_m(X_i) - r_m(x)| < h}.
struct CobraFull {
  double h = 1.0;
};

/// Agreement on at least alpha*M machines: weight_i ∝ 1{#{m : |...| < h} >= alpha M}.
struct CobraRelaxed {
  double h = 1.0;
  double alpha = 1.0;  ///< one of 1/M, 2/M, ..., 1
};

/// Kernel on the whole prediction-difference vector: weight_i ∝ K_h(r(X_i) - r(x)).
struct KernelVector {
  KernelSpec kernel;
  Bandwidth bw;
};

/// Sum of univariate kernels over coordinates: weight_i ∝ sum_m K_h(r_m(X_i) - r_m(x)).
struct KernelPerCoord {
  KernelSpec kernel;
  Bandwidth bw;
};

using WeightScheme = std::variant<CobraFull, CobraRelaxed, KernelVector, KernelPerCoord>;

/// What to predict when every weight is zero.
///   ResponseMean: mean of the aggregation responses (default).
///   Zero:         the literal 0/0 = 0 convention.
enum class ZeroMassPolicy { ResponseMean, Zero };

/// Config name: cobra, cobra-relaxed, kernel, kernel-percoord.
std::string scheme_name(const WeightScheme& scheme);
double scheme_bandwidth(const WeightScheme& scheme);
WeightScheme with_bandwidth(WeightScheme scheme, double h);
/// Throws InvalidArgument when h <= 0, alpha is not a multiple of 1/M in (0, 1], or the kernel/bandwidth pair is invalid.
void validate_scheme(const WeightScheme& scheme, std::size_t models);
/// Number of agreeing machines alpha*M rounds to (alpha is snapped to the nearest k/M).
std::size_t required_agreements(double alpha, std::size_t models);

/// Normalized weights W_i(x) for a query whose base-machine predictions are `query`.
/// Non-negative; they sum to 1 unless every raw mass is zero, in which case all are 0.
Vector weights(const WeightScheme& scheme, const PredictionMatrix& pm, std::span<const double> query);

struct AggregatePrediction {
  double value = 0.0;
  bool no_consensus = false;  ///< every weight was zero; value comes from the ZeroMassPolicy
};

/// sum_i W_i(x) Y_i for a query given in prediction space.
AggregatePrediction combine(const WeightScheme& scheme, const PredictionMatrix& pm,
                            std::span<const double> query,
                            ZeroMassPolicy policy = ZeroMassPolicy::ResponseMean);

/// The deployable combined predictor: fitted base machines, their predictions on the
/// aggregation rows, and a weighting scheme with a fixed bandwidth.
class AggregatorModel {
 public:
  AggregatorModel(std::vector<BaseLearner> learners, PredictionMatrix pm, WeightScheme scheme,
                  ZeroMassPolicy policy = ZeroMassPolicy::ResponseMean);

  /// Predicts every learner on `aggregation_rows` to form the prediction matrix.
  static AggregatorModel build(std::vector<BaseLearner> learners, const Dataset& aggregation_rows,
                               WeightScheme scheme,
                               ZeroMassPolicy policy = ZeroMassPolicy::ResponseMean);

  AggregatePrediction predict(std::span<const double> x) const;
  AggregatePrediction predict_from_predictions(std::span<const double> preds) const;

  /// OpenMP over rows of `points`; identical to predict_batch_serial.
  std::vector<AggregatePrediction> predict_batch(const Matrix& points) const;
  std::vector<AggregatePrediction> predict_batch_serial(const Matrix& points) const;

  const std::vector<BaseLearner>& learners() const { return learners_; }
  const PredictionMatrix& prediction_matrix() const { return pm_; }
  const WeightScheme& scheme() const { return scheme_; }
  ZeroMassPolicy policy() const { return policy_; }
  std::size_t dims() const { return learners_.front().dims(); }

 private:
  std::vector<BaseLearner> learners_;
  PredictionMatrix pm_;
  WeightScheme scheme_;
  ZeroMassPolicy policy_;
};

AggregatePrediction aggregate_predict(const AggregatorModel& model, std::span<const double> x);
std::vector<AggregatePrediction> aggregate_predict_batch(const AggregatorModel& model,
                                                         const Matrix& points);

}  // namespace kagg
