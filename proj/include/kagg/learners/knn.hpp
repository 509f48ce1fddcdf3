#pragma once

#include "kagg/dataset.hpp"
#include "kagg/learners/standardizer.hpp"

#include <optional>
#include <span>

namespace kagg {

struct KnnParams {
  std::size_t k = 5;
  bool standardize = true;
};

/// Brute-force k-nearest-neighbour regressor: mean response of the k closest
/// training rows in Euclidean distance, ties broken by lower row index.
class KnnModel {
 public:
  KnnModel() = default;
  /// k larger than the training size is clamped to n (see clamped()).
  KnnModel(const Dataset& train, const KnnParams& params);

  double predict(std::span<const double> x) const;

  std::size_t k() const { return k_; }
  bool clamped() const { return clamped_; }
  std::size_t dims() const { return static_cast<std::size_t>(points_.cols()); }

 private:
  std::optional<Standardizer> scaler_;
  Matrix points_;
  Vector responses_;
  std::size_t k_ = 0;
  bool clamped_ = false;
};

}  // namespace kagg
