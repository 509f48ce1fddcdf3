#include "kagg/bandwidth_opt.hpp"

#include "kagg/errors.hpp"
#include "kagg/geometry.hpp"
#include "kagg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace kagg {

namespace {

bool needs_coordinates(const WeightScheme& family) {
  return MassEvaluator(family).needs_coordinates();
}

void check_h(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("bandwidth h must be positive");
}

double fallback(ZeroMassPolicy policy, double mean) {
  return policy == ZeroMassPolicy::ResponseMean ? mean : 0.0;
}

// Weighted mean of `responses` over base rows accepted by `use`, for one query row.
// Returns false when the total mass is zero.
template <class Use>
bool weighted_mean(const MassEvaluator& mass, const PairGeometry& geo, std::size_t q,
                   const Vector& responses, Use use, double& out) {
  const std::size_t n = geo.base();
  if (mass.log_domain()) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (use(i)) top = std::max(top, mass(geo.view(q, i)));
    }
    if (!std::isfinite(top)) return false;
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!use(i)) continue;
      const double k = std::exp(mass(geo.view(q, i)) - top);
      s0 += k;
      s1 += k * responses[static_cast<Eigen::Index>(i)];
    }
    out = s1 / s0;
    return true;
  }
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!use(i)) continue;
    const double k = mass(geo.view(q, i));
    s0 += k;
    s1 += k * responses[static_cast<Eigen::Index>(i)];
  }
  if (!(s0 > 0.0)) return false;
  out = s1 / s0;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// CvObjective
// ---------------------------------------------------------------------------

CvObjective::CvObjective(PredictionMatrix pm, WeightScheme family, std::size_t folds,
                         std::uint64_t seed, ZeroMassPolicy policy)
    : pm_(std::make_shared<const PredictionMatrix>(std::move(pm))),
      family_(std::move(family)),
      n_folds_(folds),
      policy_(policy) {
  pm_->validate();
  const std::size_t n = pm_->rows();
  if (folds < 2 || folds > n) {
    throw InvalidConfig("cross-validation needs 2 <= folds <= rows (got " + std::to_string(folds) +
                        " folds for " + std::to_string(n) + " rows)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  fold_.assign(n, 0);
  for (std::size_t p = 0; p < n; ++p) fold_[order[p]] = p % folds;
  init();
}

CvObjective::CvObjective(PredictionMatrix pm, WeightScheme family,
                         std::vector<std::size_t> fold_of_row, ZeroMassPolicy policy)
    : pm_(std::make_shared<const PredictionMatrix>(std::move(pm))),
      family_(std::move(family)),
      fold_(std::move(fold_of_row)),
      policy_(policy) {
  pm_->validate();
  if (fold_.size() != pm_->rows()) throw InvalidConfig("fold labels do not match row count");
  n_folds_ = fold_.empty() ? 0 : *std::max_element(fold_.begin(), fold_.end()) + 1;
  std::vector<std::size_t> sizes(n_folds_, 0);
  for (auto f : fold_) ++sizes[f];
  if (n_folds_ < 2 || std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw InvalidConfig("cross-validation needs at least two non-empty folds");
  }
  init();
}

void CvObjective::init() {
  validate_scheme(with_bandwidth(family_, 1.0), pm_->models());
  std::vector<double> sum(n_folds_, 0.0);
  std::vector<std::size_t> count(n_folds_, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < fold_.size(); ++i) {
    const double y = pm_->responses[static_cast<Eigen::Index>(i)];
    sum[fold_[i]] += y;
    ++count[fold_[i]];
    total += y;
  }
  fold_train_mean_.resize(n_folds_);
  for (std::size_t p = 0; p < n_folds_; ++p) {
    fold_train_mean_[p] = (total - sum[p]) / static_cast<double>(fold_.size() - count[p]);
  }
  if (!geometry_ || (needs_coordinates(family_) && !geometry_->has_coordinates())) {
    geometry_ = std::make_shared<const PairGeometry>(pm_->values, pm_->values,
                                                     needs_coordinates(family_));
  }
}

CvObjective CvObjective::with_family(const WeightScheme& family) const {
  CvObjective copy = *this;
  copy.family_ = family;
  copy.init();
  return copy;
}

std::unique_ptr<BandwidthObjective> CvObjective::rebind(const WeightScheme& family) const {
  return std::make_unique<CvObjective>(with_family(family));
}

double CvObjective::value(double h) const {
  check_h(h);
  const MassEvaluator mass(with_bandwidth(family_, h));
  const std::size_t n = pm_->rows();
  std::vector<double> err(n);
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t jj = 0; jj < nn; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const std::size_t p = fold_[j];
    double g = 0.0;
    if (!weighted_mean(mass, *geometry_, j, pm_->responses,
                       [&](std::size_t i) { return fold_[i] != p; }, g)) {
      g = fallback(policy_, fold_train_mean_[p]);
    }
    const double r = g - pm_->responses[static_cast<Eigen::Index>(j)];
    err[j] = r * r;
  }
  std::vector<double> partial(n_folds_, 0.0);
  for (std::size_t j = 0; j < n; ++j) partial[fold_[j]] += err[j];
  double total = 0.0;
  for (double s : partial) total += s;
  return total / static_cast<double>(n_folds_);
}

ValueAndGradient CvObjective::value_and_gradient(double h) const {
  check_h(h);
  const MassEvaluator mass(with_bandwidth(family_, h));
  if (!mass.analytic_gradient()) {
    throw NotDifferentiable("analytic gradient needs a gaussian or exp4 kernel with multiplicative bandwidth");
  }
  const std::size_t n = pm_->rows();
  const Vector& y = pm_->responses;
  std::vector<double> err(n), derr(n);
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t jj = 0; jj < nn; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const std::size_t p = fold_[j];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_[i] != p) top = std::max(top, mass(geometry_->view(j, i)));
    }
    double g = fallback(policy_, fold_train_mean_[p]);
    double dg = 0.0;
    if (std::isfinite(top)) {
      // With K_i = exp(e_i - top) and a_i = de_i/dh:
      //   g = S1/S0,  dg/dh = (D1 S0 - S1 D0) / S0^2
      // which equals sum_{i,q} (Y_i - Y_q) K'_i K_q / S0^2.
      double s0 = 0.0, s1 = 0.0, d0 = 0.0, d1 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fold_[i] == p) continue;
        const PairView pair = geometry_->view(j, i);
        const double k = std::exp(mass(pair) - top);
        const double dk = mass.log_grad_h(pair) * k;
        const double yi = y[static_cast<Eigen::Index>(i)];
        s0 += k;
        s1 += k * yi;
        d0 += dk;
        d1 += dk * yi;
      }
      g = s1 / s0;
      dg = (d1 * s0 - s1 * d0) / (s0 * s0);
    }
    const double r = g - y[static_cast<Eigen::Index>(j)];
    err[j] = r * r;
    derr[j] = 2.0 * dg * r;
  }
  std::vector<double> pv(n_folds_, 0.0), pg(n_folds_, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    pv[fold_[j]] += err[j];
    pg[fold_[j]] += derr[j];
  }
  ValueAndGradient out;
  for (std::size_t p = 0; p < n_folds_; ++p) {
    out.value += pv[p];
    out.gradient += pg[p];
  }
  out.value /= static_cast<double>(n_folds_);
  out.gradient /= static_cast<double>(n_folds_);
  return out;
}

double CvObjective::value_reference(double h) const {
  check_h(h);
  const WeightScheme scheme = with_bandwidth(family_, h);
  double total = 0.0;
  for (std::size_t p = 0; p < n_folds_; ++p) {
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < fold_.size(); ++i) {
      if (fold_[i] != p) train_rows.push_back(i);
    }
    const PredictionMatrix train = pm_->subset(train_rows);
    const double mean = train.responses.mean();
    double fold_sum = 0.0;
    for (std::size_t j = 0; j < fold_.size(); ++j) {
      if (fold_[j] != p) continue;
      AggregatePrediction g = combine(scheme, train, row_span(pm_->values, static_cast<Eigen::Index>(j)), policy_);
      if (g.no_consensus) g.value = fallback(policy_, mean);
      const double r = g.value - pm_->responses[static_cast<Eigen::Index>(j)];
      fold_sum += r * r;
    }
    total += fold_sum;
  }
  return total / static_cast<double>(n_folds_);
}

double CvObjective::gradient_reference(double h) const {
  check_h(h);
  const auto* kv = std::get_if<KernelVector>(&family_);
  if (kv == nullptr || kv->bw.param != Parametrization::Multiplicative ||
      !supports_multiplicative(kv->kernel.kind)) {
    throw NotDifferentiable("analytic gradient needs a gaussian or exp4 kernel with multiplicative bandwidth");
  }
  const Bandwidth bw{h, Parametrization::Multiplicative};
  const Matrix& r = pm_->values;
  const Vector& y = pm_->responses;
  const std::size_t n = fold_.size();
  std::vector<double> diff(pm_->models());
  auto delta = [&](std::size_t a, std::size_t b) {
    for (std::size_t m = 0; m < diff.size(); ++m) {
      diff[m] = r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(m)) -
                r(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m));
    }
    return std::span<const double>(diff);
  };
  double total = 0.0;
  for (std::size_t p = 0; p < n_folds_; ++p) {
    double fold_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (fold_[j] != p) continue;
      std::vector<double> k(n, 0.0), dk(n, 0.0);
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fold_[i] == p) continue;
        k[i] = kernel_eval_h(kv->kernel, bw, delta(j, i));
        dk[i] = kernel_grad_h(kv->kernel, bw, delta(j, i));
        s0 += k[i];
        s1 += k[i] * y[static_cast<Eigen::Index>(i)];
      }
      if (!(s0 > 0.0)) continue;
      double dg = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fold_[i] == p) continue;
        for (std::size_t q = 0; q < n; ++q) {
          if (fold_[q] == p) continue;
          dg += (y[static_cast<Eigen::Index>(i)] - y[static_cast<Eigen::Index>(q)]) * dk[i] * k[q];
        }
      }
      dg /= s0 * s0;
      fold_sum += 2.0 * dg * (s1 / s0 - y[static_cast<Eigen::Index>(j)]);
    }
    total += fold_sum;
  }
  return total / static_cast<double>(n_folds_);
}

// ---------------------------------------------------------------------------
// HoldoutObjective
// ---------------------------------------------------------------------------

HoldoutObjective::HoldoutObjective(PredictionMatrix fit_rows, PredictionMatrix validation_rows,
                                   WeightScheme family, ZeroMassPolicy policy)
    : fit_(std::make_shared<const PredictionMatrix>(std::move(fit_rows))),
      validation_(std::make_shared<const PredictionMatrix>(std::move(validation_rows))),
      family_(std::move(family)),
      policy_(policy) {
  fit_->validate();
  validation_->validate();
  if (fit_->models() != validation_->models()) {
    throw InvalidArgument("hold-out parts disagree on the number of machines");
  }
  validate_scheme(with_bandwidth(family_, 1.0), fit_->models());
  geometry_ = std::make_shared<const PairGeometry>(validation_->values, fit_->values,
                                                   needs_coordinates(family_));
}

std::unique_ptr<BandwidthObjective> HoldoutObjective::rebind(const WeightScheme& family) const {
  auto copy = std::make_unique<HoldoutObjective>(*this);
  validate_scheme(with_bandwidth(family, 1.0), fit_->models());
  copy->family_ = family;
  if (needs_coordinates(family) && !geometry_->has_coordinates()) {
    copy->geometry_ = std::make_shared<const PairGeometry>(validation_->values, fit_->values, true);
  }
  return copy;
}

double HoldoutObjective::value(double h) const {
  check_h(h);
  const MassEvaluator mass(with_bandwidth(family_, h));
  const std::size_t n = validation_->rows();
  const double mean = fit_->responses.mean();
  std::vector<double> err(n);
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t jj = 0; jj < nn; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    double g = 0.0;
    if (!weighted_mean(mass, *geometry_, j, fit_->responses, [](std::size_t) { return true; }, g)) {
      g = fallback(policy_, mean);
    }
    const double r = g - validation_->responses[static_cast<Eigen::Index>(j)];
    err[j] = r * r;
  }
  double total = 0.0;
  for (double e : err) total += e;
  return total / static_cast<double>(n);
}

double HoldoutObjective::value_reference(double h) const {
  check_h(h);
  const WeightScheme scheme = with_bandwidth(family_, h);
  double total = 0.0;
  for (Eigen::Index j = 0; j < validation_->values.rows(); ++j) {
    const double g = combine(scheme, *fit_, row_span(validation_->values, j), policy_).value;
    const double r = g - validation_->responses[j];
    total += r * r;
  }
  return total / static_cast<double>(validation_->rows());
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

double cv_error(const CvObjective& objective, double h) { return objective.value(h); }

double cv_grad(const CvObjective& objective, double h, const GradMode& mode) {
  if (std::holds_alternative<AnalyticGradient>(mode)) {
    return objective.value_and_gradient(h).gradient;
  }
  check_h(h);
  double step = std::get<NumericalGradient>(mode).step;
  if (!(step > 0.0)) step = 1e-5 * std::max(h, 1.0);
  if (h - step <= 0.0) step = 0.5 * h;
  return (objective.value(h + step) - objective.value(h - step)) / (2.0 * step);
}

// ---------------------------------------------------------------------------
// Gradient descent
// ---------------------------------------------------------------------------

void GdConfig::validate() const {
  if (!(h0 >= 0.0) || !std::isfinite(h0)) throw InvalidConfig("gd: h0 must be non-negative");
  if (!(learning_rate > 0.0)) throw InvalidConfig("gd: learning rate must be positive");
  if (!(threshold > 0.0)) throw InvalidConfig("gd: threshold must be positive");
  if (max_iter < 1) throw InvalidConfig("gd: max_iter must be at least 1");
  if (!(lr_growth >= 1.0)) throw InvalidConfig("gd: lr_growth must be >= 1");
  if (!(floor > 0.0)) throw InvalidConfig("gd: floor must be positive");
}

std::string_view stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIter: return "max_iter";
    case StopReason::Projected: return "projected";
  }
  return "unknown";
}

GdResult fit_bandwidth_gd(const ValueGradFn& objective, const GdConfig& config) {
  config.validate();
  GdResult result;
  auto evaluate = [&](double h) {
    ++result.evaluations;
    return objective(h);
  };
  auto finite = [](const ValueAndGradient& v) {
    return std::isfinite(v.value) && std::isfinite(v.gradient);
  };

  double h = config.h0;
  ValueAndGradient current = evaluate(h);
  result.trace.push_back({h, current.value, current.gradient, 0.0, false});
  if (!finite(current)) throw GdDiverged("gd: objective is not finite at h0", result.trace);

  double rate = config.learning_rate;
  result.stop = StopReason::MaxIter;
  for (std::size_t k = 1; k <= config.max_iter; ++k) {
    if (std::abs(current.gradient) <= config.threshold) {
      result.stop = StopReason::Converged;
      break;
    }
    double candidate = 0.0;
    bool projected = false;
    ValueAndGradient next;
    for (std::size_t halving = 0;; ++halving) {
      candidate = h - rate * current.gradient;
      projected = !(candidate >= config.floor);
      if (projected) candidate = config.floor;
      next = evaluate(candidate);
      if (!finite(next)) {
        throw GdDiverged("gd: objective is not finite at h=" + std::to_string(candidate), result.trace);
      }
      if (next.value <= current.value || halving == config.max_halvings) break;
      rate *= 0.5;
    }
    result.trace.push_back({candidate, next.value, next.gradient, rate, projected});
    result.iterations = k;
    const bool stuck = projected && candidate == h;
    h = candidate;
    current = next;
    if (stuck) {
      result.stop = StopReason::Projected;
      break;
    }
    rate *= config.lr_growth;
  }
  if (result.stop == StopReason::MaxIter && std::abs(current.gradient) <= config.threshold) {
    result.stop = StopReason::Converged;
  }
  result.h_star = h;
  return result;
}

GdResult fit_bandwidth_gd(const CvObjective& objective, const GdConfig& config) {
  const auto* kv = std::get_if<KernelVector>(&objective.family());
  if (kv == nullptr || is_compact(kv->kernel.kind)) {
    throw NotDifferentiable("gradient descent needs a gaussian or exp4 kernel; use grid search");
  }
  if (std::holds_alternative<AnalyticGradient>(config.grad_mode)) {
    return fit_bandwidth_gd([&](double h) { return objective.value_and_gradient(h); }, config);
  }
  const GradMode mode = config.grad_mode;
  return fit_bandwidth_gd(
      [&](double h) {
        return ValueAndGradient{objective.value(h), cv_grad(objective, h, mode)};
      },
      config);
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

void GridConfig::validate() const {
  if (!(h_min > 0.0) || !(h_max > h_min)) throw InvalidConfig("grid: need 0 < h_min < h_max");
  if (points < 2) throw InvalidConfig("grid: need at least 2 points");
}

std::vector<double> GridConfig::nodes() const {
  validate();
  std::vector<double> out(points);
  const double last = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / last;
    out[i] = spacing == Spacing::Linear
                 ? h_min + (h_max - h_min) * t
                 : std::exp(std::log(h_min) + (std::log(h_max) - std::log(h_min)) * t);
  }
  out.back() = h_max;
  return out;
}

std::size_t argmin_first(const std::vector<double>& curve) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i] < curve[best]) best = i;
  }
  return best;
}

GridResult fit_bandwidth_grid(const std::function<double(double)>& objective, const GridConfig& grid) {
  GridResult result;
  result.nodes = grid.nodes();
  result.curve.reserve(result.nodes.size());
  for (double h : result.nodes) result.curve.push_back(objective(h));
  result.best_index = argmin_first(result.curve);
  result.h_star = result.nodes[result.best_index];
  result.best_value = result.curve[result.best_index];
  return result;
}

GridResult fit_bandwidth_grid(const BandwidthObjective& objective, const GridConfig& grid) {
  return fit_bandwidth_grid([&](double h) { return objective.value(h); }, grid);
}

AlphaGridResult fit_alpha_grid(const BandwidthObjective& objective, const GridConfig& grid,
                               std::size_t models) {
  if (models < 1) throw InvalidArgument("fit_alpha_grid: need at least one machine");
  if (models != objective.models()) throw InvalidArgument("fit_alpha_grid: machine count mismatch");
  const WeightScheme& family = objective.family();
  if (!std::holds_alternative<CobraRelaxed>(family) && !std::holds_alternative<CobraFull>(family)) {
    throw InvalidArgument("fit_alpha_grid: needs a cobra family");
  }
  AlphaGridResult result;
  result.nodes = grid.nodes();
  bool have = false;
  for (std::size_t count = models; count >= 1; --count) {
    const double alpha = static_cast<double>(count) / static_cast<double>(models);
    const auto bound = objective.rebind(CobraRelaxed{1.0, alpha});
    const GridResult g = fit_bandwidth_grid(*bound, grid);
    result.alphas.push_back(alpha);
    result.table.push_back(g.curve);
    if (!have || g.best_value < result.best_value) {
      have = true;
      result.alpha_star = alpha;
      result.h_star = g.h_star;
      result.best_value = g.best_value;
    }
  }
  return result;
}

}  // namespace kagg
