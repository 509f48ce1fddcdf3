#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace kagg {

/// Row-major so that a single observation is contiguous and can be viewed as a span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline std::span<const double> row_span(const Matrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

/// Features X (n x d) and responses Y (n), row-aligned.
struct Dataset {
  Matrix features;
  Vector responses;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }

  /// Throws InvalidArgument unless n >= 1, d >= 1, shapes align and all entries are finite.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices) const;
};

}  // namespace kagg
