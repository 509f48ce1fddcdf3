#pragma once

#include <span>
#include <string_view>

// Kernel family used to score agreement between prediction vectors.
//
//   naive              prod_i 1{|z_i| <= 1}
//   epanechnikov       (1 - |z|^2)     1{|z| <= 1}
//   biweight           (1 - |z|^2)^2   1{|z| <= 1}
//   triweight          (1 - |z|^2)^3   1{|z| <= 1}
//   compact-gaussian   exp(-|z|^2 / (2 s^2)) 1{|z| <= rho1}
//   gaussian           exp(-|z|^2 / (2 s^2))
//   exp4               exp(-|z|^4 / (2 s^4))
//
// Every member peaks at K(0) = 1 and is non-increasing in |z| (in max|z_i|
// for the naive kernel).

namespace kagg {

enum class KernelKind { Naive, Epanechnikov, BiWeight, TriWeight, CompactGaussian, Gaussian, Exp4 };

struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  double sigma = 1.0;
  double rho1 = 3.0;

  void validate() const;
};

/// How the bandwidth enters the kernel.
///   Divisive:       K_h(z) = K(z / h)
///   Multiplicative: K_h(z) = exp(-h |z|^2 / (2 s^2))  or  exp(-h |z|^4 / (2 s^4))
/// Multiplicative is only defined for the gaussian and exp4 kernels.
enum class Parametrization { Divisive, Multiplicative };

struct Bandwidth {
  double h = 1.0;
  Parametrization param = Parametrization::Divisive;
};

std::string_view kernel_name(KernelKind kind);
/// Accepts the config spellings listed above; throws InvalidConfig otherwise.
KernelKind parse_kernel(std::string_view name);

bool is_compact(KernelKind kind);
/// True for the kernels evaluated through an exponent (compact-gaussian, gaussian, exp4).
bool is_exponential(KernelKind kind);
bool supports_multiplicative(KernelKind kind);

/// Throws InvalidArgument for h <= 0 and for Multiplicative with a kernel other than gaussian/exp4.
void validate_bandwidth(const KernelSpec& spec, const Bandwidth& bw);

double kernel_eval(const KernelSpec& spec, std::span<const double> z);
double kernel_eval_h(const KernelSpec& spec, const Bandwidth& bw, std::span<const double> z);

/// dK_h/dh for gaussian/exp4 under the multiplicative parametrization.
/// Throws NotDifferentiable for any other combination.
double kernel_grad_h(const KernelSpec& spec, const Bandwidth& bw, std::span<const double> z);

// Reduced forms. Every kernel above depends on z only through |z|^2 or max_i |z_i|,
// so callers that cache those quantities can skip the vector.

/// K_h evaluated from sq_norm = |z|^2 and max_abs = max_i |z_i|.
double kernel_profile(const KernelSpec& spec, const Bandwidth& bw, double sq_norm, double max_abs);

/// log K_h for exponential kernels (-inf outside the compact-gaussian support).
double kernel_log_profile(const KernelSpec& spec, const Bandwidth& bw, double sq_norm);

/// d(log K_h)/dh for gaussian/exp4 under the multiplicative parametrization.
double kernel_log_profile_grad_h(const KernelSpec& spec, double sq_norm);

}  // namespace kagg
