#include "kagg/learners/standardizer.hpp"

#include "kagg/errors.hpp"

#include <cmath>

namespace kagg {

Standardizer::Standardizer(const Matrix& train) {
  const auto n = static_cast<double>(train.rows());
  mean_ = train.colwise().mean().transpose();
  scale_.resize(train.cols());
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    const double var = (train.col(j).array() - mean_[j]).square().sum() / n;
    scale_[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
}

Matrix Standardizer::transform(const Matrix& x) const {
  if (x.cols() != mean_.size()) throw InvalidArgument("standardizer: dimension mismatch");
  Matrix out = x;
  out.rowwise() -= mean_.transpose();
  out.array().rowwise() /= scale_.transpose().array();
  return out;
}

void Standardizer::transform_row(std::span<const double> x, std::span<double> out) const {
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out[j] = (x[j] - mean_[jj]) / scale_[jj];
  }
}

}  // namespace kagg
