#pragma once

// Shared machinery for evaluating weighting schemes on pairs of prediction vectors.

#include "kagg/aggregation.hpp"

#include <vector>

namespace kagg {

/// Distances between one query prediction vector and one aggregation row.
struct PairView {
  double sq_norm = 0.0;
  double max_abs = 0.0;
  const double* abs_diff = nullptr;  ///< per-coordinate |difference|, length M (may be null)
  std::size_t models = 0;
};

PairView make_pair_view(std::span<const double> a, std::span<const double> b,
                        std::vector<double>& abs_scratch);

/// Raw (unnormalized) mass of a pair under a fixed scheme.
///
/// Exponential kernels on the full vector report log-masses so that normalization can
/// subtract the largest exponent first; the weights are unchanged but never underflow
/// to an all-zero vector.
class MassEvaluator {
 public:
  explicit MassEvaluator(const WeightScheme& scheme);

  bool log_domain() const { return log_domain_; }
  bool needs_coordinates() const { return needs_coordinates_; }

  /// Mass, or log-mass when log_domain().
  double operator()(const PairView& pair) const;

  /// d(log-mass)/dh. Only for gaussian/exp4 KernelVector with multiplicative bandwidth.
  double log_grad_h(const PairView& pair) const;

  /// True when log_grad_h is available.
  bool analytic_gradient() const { return analytic_; }

 private:
  WeightScheme scheme_;
  bool log_domain_ = false;
  bool needs_coordinates_ = false;
  bool analytic_ = false;
  std::size_t required_ = 0;
};

/// Turns raw masses (or log-masses) into normalized weights in place.
/// Returns false, leaving all zeros, when the total mass is zero.
bool normalize_masses(std::span<double> masses, bool log_domain);

/// All pairwise distances between query rows and base rows in prediction space.
class PairGeometry {
 public:
  PairGeometry(const Matrix& queries, const Matrix& base, bool with_coordinates);

  std::size_t queries() const { return n_queries_; }
  std::size_t base() const { return n_base_; }
  std::size_t models() const { return models_; }
  bool has_coordinates() const { return !abs_.empty() || models_ == 0; }

  PairView view(std::size_t q, std::size_t i) const {
    const std::size_t at = q * n_base_ + i;
    return {sq_[at], max_[at], abs_.empty() ? nullptr : abs_.data() + at * models_, models_};
  }

 private:
  std::size_t n_queries_ = 0;
  std::size_t n_base_ = 0;
  std::size_t models_ = 0;
  std::vector<double> sq_;
  std::vector<double> max_;
  std::vector<double> abs_;
};

}  // namespace kagg
