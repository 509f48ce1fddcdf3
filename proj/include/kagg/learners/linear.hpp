#pragma once

#include "kagg/dataset.hpp"
#include "kagg/learners/standardizer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

namespace kagg {

/// Penalty grid searched when lambda is left unset: 50 log-spaced values in [1e-4, 1e2].
std::vector<double> default_lambda_grid();

struct RidgeParams {
  std::optional<double> lambda;  ///< unset: chosen by internal CV
  std::size_t cv_folds = 5;
};

struct LassoParams {
  std::optional<double> lambda;  ///< unset: chosen by internal CV
  double tol = 1e-7;
  std::size_t max_iter = 10000;
  std::size_t cv_folds = 5;
};

/// Affine predictor y = intercept + <coef, standardize(x)>.
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(Standardizer scaler, Vector coef, double intercept, double lambda)
      : scaler_(std::move(scaler)), coef_(std::move(coef)), intercept_(intercept), lambda_(lambda) {}

  double predict(std::span<const double> x) const;

  /// Coefficients and intercept mapped back to the original feature units.
  Vector raw_slope() const;
  double raw_intercept() const;

  const Vector& coefficients() const { return coef_; }
  double intercept() const { return intercept_; }
  double lambda() const { return lambda_; }
  std::size_t dims() const { return static_cast<std::size_t>(coef_.size()); }

 private:
  Standardizer scaler_;
  Vector coef_;
  double intercept_ = 0.0;
  double lambda_ = 0.0;
};

/// Ridge on standardized features and centered responses:
///   min_b (1/2n)|y - Zb|^2 + (lambda/2)|b|^2.
LinearModel fit_ridge(const Dataset& train, const RidgeParams& params, std::uint64_t seed);

/// Lasso on standardized features and centered responses:
///   min_b (1/2n)|y - Zb|^2 + lambda |b|_1,
/// solved by cyclic coordinate descent with soft-thresholding.
LinearModel fit_lasso(const Dataset& train, const LassoParams& params, std::uint64_t seed);

struct LassoSolveResult {
  Vector coef;
  std::size_t sweeps = 0;
  bool converged = false;
};

/// Coordinate descent on an already standardized design `z` and centered `y`.
/// `coef` is the warm start. `on_sweep`, when set, sees the coefficients after each full sweep.
LassoSolveResult lasso_coordinate_descent(const Matrix& z, const Vector& y, double lambda,
                                          Vector coef, double tol, std::size_t max_iter,
                                          const std::function<void(const Vector&)>& on_sweep = {});

double lasso_objective(const Matrix& z, const Vector& y, const Vector& coef, double lambda);

}  // namespace kagg
