#include "kagg/geometry.hpp"

#include "kagg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kagg {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

PairView make_pair_view(std::span<const double> a, std::span<const double> b,
                        std::vector<double>& abs_scratch) {
  abs_scratch.resize(a.size());
  double sq = 0.0, mx = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    const double t = std::abs(a[m] - b[m]);
    abs_scratch[m] = t;
    sq += t * t;
    mx = std::max(mx, t);
  }
  return {sq, mx, abs_scratch.data(), a.size()};
}

MassEvaluator::MassEvaluator(const WeightScheme& scheme) : scheme_(scheme) {
  std::visit(Overloaded{
                 [](const CobraFull&) {},
                 [&](const CobraRelaxed&) { needs_coordinates_ = true; },
                 [&](const KernelVector& k) {
                   log_domain_ = is_exponential(k.kernel.kind);
                   analytic_ = k.bw.param == Parametrization::Multiplicative &&
                               supports_multiplicative(k.kernel.kind);
                 },
                 [&](const KernelPerCoord&) { needs_coordinates_ = true; },
             },
             scheme_);
}

double MassEvaluator::operator()(const PairView& pair) const {
  return std::visit(
      Overloaded{
          [&](const CobraFull& s) { return pair.max_abs < s.h ? 1.0 : 0.0; },
          [&](const CobraRelaxed& s) {
            const std::size_t need = required_agreements(s.alpha, pair.models);
            std::size_t agree = 0;
            for (std::size_t m = 0; m < pair.models; ++m) agree += pair.abs_diff[m] < s.h ? 1 : 0;
            return agree >= need ? 1.0 : 0.0;
          },
          [&](const KernelVector& s) {
            if (log_domain_) return kernel_log_profile(s.kernel, s.bw, pair.sq_norm);
            return kernel_profile(s.kernel, s.bw, pair.sq_norm, pair.max_abs);
          },
          [&](const KernelPerCoord& s) {
            double acc = 0.0;
            for (std::size_t m = 0; m < pair.models; ++m) {
              const double t = pair.abs_diff[m];
              acc += kernel_profile(s.kernel, s.bw, t * t, t);
            }
            return acc;
          },
      },
      scheme_);
}

double MassEvaluator::log_grad_h(const PairView& pair) const {
  if (!analytic_) throw NotDifferentiable("scheme has no analytic bandwidth derivative");
  return kernel_log_profile_grad_h(std::get<KernelVector>(scheme_).kernel, pair.sq_norm);
}

bool normalize_masses(std::span<double> masses, bool log_domain) {
  if (log_domain) {
    double top = -std::numeric_limits<double>::infinity();
    for (double e : masses) top = std::max(top, e);
    if (!std::isfinite(top)) {
      std::fill(masses.begin(), masses.end(), 0.0);
      return false;
    }
    for (double& e : masses) e = std::exp(e - top);
  }
  double total = 0.0;
  for (double w : masses) total += w;
  if (!(total > 0.0)) {
    std::fill(masses.begin(), masses.end(), 0.0);
    return false;
  }
  for (double& w : masses) w /= total;
  return true;
}

PairGeometry::PairGeometry(const Matrix& queries, const Matrix& base, bool with_coordinates)
    : n_queries_(static_cast<std::size_t>(queries.rows())),
      n_base_(static_cast<std::size_t>(base.rows())),
      models_(static_cast<std::size_t>(base.cols())) {
  if (queries.cols() != base.cols()) throw InvalidArgument("geometry: column mismatch");
  sq_.resize(n_queries_ * n_base_);
  max_.resize(n_queries_ * n_base_);
  if (with_coordinates) abs_.resize(n_queries_ * n_base_ * models_);
  const auto nq = static_cast<std::ptrdiff_t>(n_queries_);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < nq; ++q) {
    const double* a = queries.data() + q * static_cast<std::ptrdiff_t>(models_);
    for (std::size_t i = 0; i < n_base_; ++i) {
      const double* b = base.data() + i * models_;
      const std::size_t at = static_cast<std::size_t>(q) * n_base_ + i;
      double sq = 0.0, mx = 0.0;
      for (std::size_t m = 0; m < models_; ++m) {
        const double t = std::abs(a[m] - b[m]);
        sq += t * t;
        mx = std::max(mx, t);
        if (with_coordinates) abs_[at * models_ + m] = t;
      }
      sq_[at] = sq;
      max_[at] = mx;
    }
  }
}

}  // namespace kagg
