#include "kagg/learners/linear.hpp"

#include "kagg/errors.hpp"
#include "kagg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kagg {

namespace {

using ColMatrix = Eigen::MatrixXd;

constexpr double kSingularCut = 1e-10;

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> fold(n);
  for (std::size_t p = 0; p < n; ++p) fold[order[p]] = p % folds;
  return fold;
}

struct FoldData {
  ColMatrix z_train;
  Vector y_train;  // centered
  double y_mean = 0.0;
  ColMatrix z_val;
  Vector y_val;
};

// Splits a standardized design into fold train/validation parts, re-centering on the train side.
FoldData make_fold(const Matrix& z, const Vector& y, const std::vector<std::size_t>& fold,
                   std::size_t which) {
  std::vector<Eigen::Index> tr, va;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    (fold[i] == which ? va : tr).push_back(static_cast<Eigen::Index>(i));
  }
  FoldData f;
  f.z_train = z(tr, Eigen::all);
  f.z_val = z(va, Eigen::all);
  f.y_train = y(tr);
  f.y_val = y(va);
  const Eigen::RowVectorXd mu = f.z_train.colwise().mean();
  f.z_train.rowwise() -= mu;
  f.z_val.rowwise() -= mu;
  f.y_mean = f.y_train.mean();
  f.y_train.array() -= f.y_mean;
  return f;
}

std::size_t effective_folds(std::size_t n, std::size_t requested) {
  return std::clamp<std::size_t>(requested, 2, std::max<std::size_t>(2, n));
}

// Min-norm ridge solution through the thin SVD; handles lambda = 0 and d > n.
Vector ridge_svd(const ColMatrix& z, const Vector& y, double lambda) {
  Eigen::BDCSVD<ColMatrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double n = static_cast<double>(z.rows());
  const double cut = s.size() > 0 ? s[0] * kSingularCut : 0.0;
  Vector shrink(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    shrink[i] = s[i] > cut ? s[i] / (s[i] * s[i] + n * lambda) : 0.0;
  }
  return svd.matrixV() * (shrink.asDiagonal() * (svd.matrixU().transpose() * y));
}

Vector ridge_solve(const ColMatrix& z, const Vector& y, double lambda) {
  const auto n = static_cast<double>(z.rows());
  if (z.cols() <= z.rows()) {
    ColMatrix gram = z.transpose() * z / n;
    gram.diagonal().array() += lambda;
    Eigen::LLT<ColMatrix> llt(gram);
    if (llt.info() == Eigen::Success) {
      Vector coef = llt.solve(z.transpose() * y / n);
      if (coef.allFinite()) return coef;
    }
  }
  return ridge_svd(z, y, lambda);
}

double choose_ridge_lambda(const Matrix& z, const Vector& y, std::size_t folds, std::uint64_t seed) {
  const auto grid = default_lambda_grid();
  const std::size_t k = effective_folds(static_cast<std::size_t>(z.rows()), folds);
  const auto fold = fold_assignment(static_cast<std::size_t>(z.rows()), k, seed);
  std::vector<double> cv(grid.size(), 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const FoldData f = make_fold(z, y, fold, p);
    if (f.y_val.size() == 0 || f.y_train.size() == 0) continue;
    Eigen::BDCSVD<ColMatrix> svd(f.z_train, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const Vector uty = svd.matrixU().transpose() * f.y_train;
    const ColMatrix zv = f.z_val * svd.matrixV();
    const double n = static_cast<double>(f.z_train.rows());
    const double cut = s.size() > 0 ? s[0] * kSingularCut : 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      Vector w(s.size());
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        w[i] = s[i] > cut ? s[i] / (s[i] * s[i] + n * grid[g]) * uty[i] : 0.0;
      }
      const Vector pred = (zv * w).array() + f.y_mean;
      cv[g] += (pred - f.y_val).squaredNorm();
    }
  }
  return grid[static_cast<std::size_t>(std::min_element(cv.begin(), cv.end()) - cv.begin())];
}

// Cyclic coordinate descent with an active-set inner loop. Works on a column-major design.
LassoSolveResult cd_solve(const ColMatrix& z, const Vector& y, double lambda, Vector coef,
                          double tol, std::size_t max_iter,
                          const std::function<void(const Vector&)>& on_sweep) {
  const auto n = static_cast<double>(z.rows());
  const Eigen::Index d = z.cols();
  Vector col_var(d);
  for (Eigen::Index j = 0; j < d; ++j) col_var[j] = z.col(j).squaredNorm() / n;
  Vector resid = y - z * coef;

  LassoSolveResult out;
  auto sweep = [&](bool active_only) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (col_var[j] <= 0.0) continue;
      const double old = coef[j];
      if (active_only && old == 0.0) continue;
      const double rho = z.col(j).dot(resid) / n + col_var[j] * old;
      const double updated = soft_threshold(rho, lambda) / col_var[j];
      if (updated != old) {
        resid -= z.col(j) * (updated - old);
        coef[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old) * std::sqrt(col_var[j]));
      }
    }
    ++out.sweeps;
    if (on_sweep) on_sweep(coef);
    return max_change;
  };

  while (out.sweeps < max_iter) {
    if (sweep(false) < tol) {
      out.converged = true;
      break;
    }
    while (out.sweeps < max_iter) {
      if (sweep(true) < tol) break;
    }
  }
  out.coef = std::move(coef);
  return out;
}

double lambda_max(const ColMatrix& z, const Vector& y) {
  return (z.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(z.rows());
}

// Grid values from the largest useful penalty down to the target, for warm starts.
std::vector<double> path_to(const std::vector<double>& grid, double lmax, double target) {
  std::vector<double> path;
  for (double l : grid) {
    if (l >= target && l < lmax) path.push_back(l);
  }
  if (path.empty() || path.back() != target) path.push_back(target);
  return path;
}

double choose_lasso_lambda(const Matrix& z, const Vector& y, const LassoParams& params,
                           std::uint64_t seed) {
  const auto grid = default_lambda_grid();  // descending
  const std::size_t k = effective_folds(static_cast<std::size_t>(z.rows()), params.cv_folds);
  const auto fold = fold_assignment(static_cast<std::size_t>(z.rows()), k, seed);
  std::vector<double> cv(grid.size(), 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const FoldData f = make_fold(z, y, fold, p);
    if (f.y_val.size() == 0 || f.y_train.size() == 0) continue;
    const double lmax = lambda_max(f.z_train, f.y_train);
    const double null_dev = f.y_train.squaredNorm();
    Vector coef = Vector::Zero(f.z_train.cols());
    double last_err = (f.y_val.array() - f.y_mean).square().sum();
    bool saturated = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (grid[g] < lmax && !saturated) {
        coef = cd_solve(f.z_train, f.y_train, grid[g], std::move(coef), params.tol,
                        params.max_iter, {}).coef;
        const Vector pred = (f.z_val * coef).array() + f.y_mean;
        last_err = (pred - f.y_val).squaredNorm();
        // Stop walking the path once the fit explains essentially all training variance.
        const double rss = (f.y_train - f.z_train * coef).squaredNorm();
        if (null_dev > 0.0 && rss < 1e-3 * null_dev) saturated = true;
      }
      cv[g] += last_err;
    }
  }
  return grid[static_cast<std::size_t>(std::min_element(cv.begin(), cv.end()) - cv.begin())];
}

void require_features(const Dataset& train) {
  train.validate();
}

}  // namespace

std::vector<double> default_lambda_grid() {
  constexpr std::size_t kPoints = 50;
  std::vector<double> grid(kPoints);
  const double lo = std::log(1e-4);
  const double hi = std::log(1e2);
  for (std::size_t i = 0; i < kPoints; ++i) {
    grid[i] = std::exp(hi - (hi - lo) * static_cast<double>(i) / (kPoints - 1));
  }
  return grid;
}

double LinearModel::predict(std::span<const double> x) const {
  if (x.size() != dims()) throw InvalidArgument("linear model: dimension mismatch");
  double acc = intercept_;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    acc += coef_[jj] * (x[j] - scaler_.mean()[jj]) / scaler_.scale()[jj];
  }
  return acc;
}

Vector LinearModel::raw_slope() const { return coef_.cwiseQuotient(scaler_.scale()); }

double LinearModel::raw_intercept() const { return intercept_ - raw_slope().dot(scaler_.mean()); }

LinearModel fit_ridge(const Dataset& train, const RidgeParams& params, std::uint64_t seed) {
  require_features(train);
  Standardizer scaler(train.features);
  const Matrix z = scaler.transform(train.features);
  const double y_mean = train.responses.mean();
  const Vector y = train.responses.array() - y_mean;
  double lambda = 0.0;
  if (params.lambda) {
    if (!(*params.lambda >= 0.0)) throw InvalidArgument("ridge lambda must be non-negative");
    lambda = *params.lambda;
  } else {
    lambda = choose_ridge_lambda(z, y, params.cv_folds, seed);
  }
  Vector coef = ridge_solve(ColMatrix(z), y, lambda);
  return LinearModel(std::move(scaler), std::move(coef), y_mean, lambda);
}

LinearModel fit_lasso(const Dataset& train, const LassoParams& params, std::uint64_t seed) {
  require_features(train);
  Standardizer scaler(train.features);
  const Matrix z = scaler.transform(train.features);
  const double y_mean = train.responses.mean();
  const Vector y = train.responses.array() - y_mean;
  double lambda = 0.0;
  if (params.lambda) {
    if (!(*params.lambda >= 0.0)) throw InvalidArgument("lasso lambda must be non-negative");
    lambda = *params.lambda;
  } else {
    lambda = choose_lasso_lambda(z, y, params, seed);
  }
  const ColMatrix zc(z);
  Vector coef = Vector::Zero(z.cols());
  const double lmax = lambda_max(zc, y);
  for (double l : path_to(default_lambda_grid(), lmax, lambda)) {
    coef = cd_solve(zc, y, l, std::move(coef), params.tol, params.max_iter, {}).coef;
  }
  return LinearModel(std::move(scaler), std::move(coef), y_mean, lambda);
}

LassoSolveResult lasso_coordinate_descent(const Matrix& z, const Vector& y, double lambda,
                                          Vector coef, double tol, std::size_t max_iter,
                                          const std::function<void(const Vector&)>& on_sweep) {
  if (z.rows() != y.size() || coef.size() != z.cols()) {
    throw InvalidArgument("lasso: shape mismatch");
  }
  return cd_solve(ColMatrix(z), y, lambda, std::move(coef), tol, max_iter, on_sweep);
}

double lasso_objective(const Matrix& z, const Vector& y, const Vector& coef, double lambda) {
  const auto n = static_cast<double>(z.rows());
  return (y - z * coef).squaredNorm() / (2.0 * n) + lambda * coef.lpNorm<1>();
}

}  // namespace kagg
