#pragma once

#include "kagg/dataset.hpp"

namespace kagg {

/// Column-wise z-scoring with statistics taken from the training rows.
/// Constant columns keep unit scale so they map to zero.
class Standardizer {
 public:
  Standardizer() = default;
  explicit Standardizer(const Matrix& train);

  Matrix transform(const Matrix& x) const;
  void transform_row(std::span<const double> x, std::span<double> out) const;

  const Vector& mean() const { return mean_; }
  const Vector& scale() const { return scale_; }

 private:
  Vector mean_;
  Vector scale_;
};

}  // namespace kagg
