#include "kagg/kernels.hpp"

#include "kagg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kagg {

namespace {

void require_finite(std::span<const double> z) {
  for (double v : z) {
    if (!std::isfinite(v)) throw InvalidArgument("kernel argument is not finite");
  }
}

double squared_norm(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

double max_abs(std::span<const double> z) {
  double m = 0.0;
  for (double v : z) m = std::max(m, std::abs(v));
  return m;
}

// Unscaled kernel as a function of |z|^2 and max|z_i|.
double base_profile(const KernelSpec& spec, double sq, double mx) {
  switch (spec.kind) {
    case KernelKind::Naive:
      return mx <= 1.0 ? 1.0 : 0.0;
    case KernelKind::Epanechnikov:
      return sq <= 1.0 ? 1.0 - sq : 0.0;
    case KernelKind::BiWeight: {
      const double t = 1.0 - sq;
      return sq <= 1.0 ? t * t : 0.0;
    }
    case KernelKind::TriWeight: {
      const double t = 1.0 - sq;
      return sq <= 1.0 ? t * t * t : 0.0;
    }
    case KernelKind::CompactGaussian:
      return sq <= spec.rho1 * spec.rho1 ? std::exp(-sq / (2.0 * spec.sigma * spec.sigma)) : 0.0;
    case KernelKind::Gaussian:
      return std::exp(-sq / (2.0 * spec.sigma * spec.sigma));
    case KernelKind::Exp4: {
      const double s2 = spec.sigma * spec.sigma;
      return std::exp(-(sq * sq) / (2.0 * s2 * s2));
    }
  }
  return 0.0;
}

}  // namespace

void KernelSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("kernel sigma must be positive");
  if (!(rho1 > 0.0) || !std::isfinite(rho1)) throw InvalidArgument("kernel rho1 must be positive");
}

std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::Naive: return "naive";
    case KernelKind::Epanechnikov: return "epanechnikov";
    case KernelKind::BiWeight: return "biweight";
    case KernelKind::TriWeight: return "triweight";
    case KernelKind::CompactGaussian: return "compact-gaussian";
    case KernelKind::Gaussian: return "gaussian";
    case KernelKind::Exp4: return "exp4";
  }
  return "unknown";
}

KernelKind parse_kernel(std::string_view name) {
  for (auto kind : {KernelKind::Naive, KernelKind::Epanechnikov, KernelKind::BiWeight,
                    KernelKind::TriWeight, KernelKind::CompactGaussian, KernelKind::Gaussian,
                    KernelKind::Exp4}) {
    if (kernel_name(kind) == name) return kind;
  }
  throw InvalidConfig("unknown kernel '" + std::string(name) + "'");
}

bool is_compact(KernelKind kind) {
  return kind != KernelKind::Gaussian && kind != KernelKind::Exp4;
}

bool is_exponential(KernelKind kind) {
  return kind == KernelKind::CompactGaussian || kind == KernelKind::Gaussian ||
         kind == KernelKind::Exp4;
}

bool supports_multiplicative(KernelKind kind) {
  return kind == KernelKind::Gaussian || kind == KernelKind::Exp4;
}

void validate_bandwidth(const KernelSpec& spec, const Bandwidth& bw) {
  if (!(bw.h > 0.0) || !std::isfinite(bw.h)) throw InvalidArgument("bandwidth h must be positive");
  if (bw.param == Parametrization::Multiplicative && !supports_multiplicative(spec.kind)) {
    throw InvalidArgument("multiplicative bandwidth is not defined for the " +
                          std::string(kernel_name(spec.kind)) + " kernel");
  }
}

double kernel_profile(const KernelSpec& spec, const Bandwidth& bw, double sq_norm, double max_abs_v) {
  if (bw.param == Parametrization::Multiplicative) {
    return std::exp(kernel_log_profile(spec, bw, sq_norm));
  }
  const double inv = 1.0 / bw.h;
  return base_profile(spec, sq_norm * inv * inv, max_abs_v * inv);
}

double kernel_log_profile(const KernelSpec& spec, const Bandwidth& bw, double sq_norm) {
  const double s2 = spec.sigma * spec.sigma;
  if (bw.param == Parametrization::Multiplicative) {
    if (spec.kind == KernelKind::Gaussian) return -bw.h * sq_norm / (2.0 * s2);
    if (spec.kind == KernelKind::Exp4) return -bw.h * sq_norm * sq_norm / (2.0 * s2 * s2);
    throw InvalidArgument("multiplicative bandwidth is not defined for this kernel");
  }
  const double sq = sq_norm / (bw.h * bw.h);
  switch (spec.kind) {
    case KernelKind::CompactGaussian:
      if (sq > spec.rho1 * spec.rho1) return -std::numeric_limits<double>::infinity();
      return -sq / (2.0 * s2);
    case KernelKind::Gaussian:
      return -sq / (2.0 * s2);
    case KernelKind::Exp4:
      return -sq * sq / (2.0 * s2 * s2);
    default:
      throw InvalidArgument("log profile requested for a polynomial kernel");
  }
}

double kernel_log_profile_grad_h(const KernelSpec& spec, double sq_norm) {
  const double s2 = spec.sigma * spec.sigma;
  if (spec.kind == KernelKind::Gaussian) return -sq_norm / (2.0 * s2);
  if (spec.kind == KernelKind::Exp4) return -sq_norm * sq_norm / (2.0 * s2 * s2);
  throw NotDifferentiable("no analytic bandwidth derivative for the " +
                          std::string(kernel_name(spec.kind)) + " kernel");
}

double kernel_eval(const KernelSpec& spec, std::span<const double> z) {
  require_finite(z);
  return base_profile(spec, squared_norm(z), max_abs(z));
}

double kernel_eval_h(const KernelSpec& spec, const Bandwidth& bw, std::span<const double> z) {
  require_finite(z);
  validate_bandwidth(spec, bw);
  return kernel_profile(spec, bw, squared_norm(z), max_abs(z));
}

double kernel_grad_h(const KernelSpec& spec, const Bandwidth& bw, std::span<const double> z) {
  require_finite(z);
  if (bw.param != Parametrization::Multiplicative || !supports_multiplicative(spec.kind)) {
    throw NotDifferentiable("analytic dK/dh needs a gaussian or exp4 kernel with multiplicative bandwidth");
  }
  validate_bandwidth(spec, bw);
  const double sq = squared_norm(z);
  return kernel_log_profile_grad_h(spec, sq) * std::exp(kernel_log_profile(spec, bw, sq));
}

}  // namespace kagg
