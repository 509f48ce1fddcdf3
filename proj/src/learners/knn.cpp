#include "kagg/learners/knn.hpp"

#include "kagg/errors.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <utility>
#include <vector>

namespace kagg {

KnnModel::KnnModel(const Dataset& train, const KnnParams& params) {
  train.validate();
  if (params.k == 0) throw InvalidArgument("knn: k must be at least 1");
  k_ = params.k;
  if (k_ > train.rows()) {
    std::clog << "kagg: knn k=" << k_ << " exceeds " << train.rows()
              << " training rows; clamping\n";
    k_ = train.rows();
    clamped_ = true;
  }
  if (params.standardize) {
    scaler_.emplace(train.features);
    points_ = scaler_->transform(train.features);
  } else {
    points_ = train.features;
  }
  responses_ = train.responses;
}

double KnnModel::predict(std::span<const double> x) const {
  if (x.size() != dims()) throw InvalidArgument("knn: dimension mismatch");
  std::vector<double> query(x.begin(), x.end());
  if (scaler_) scaler_->transform_row(x, query);

  const auto n = static_cast<std::size_t>(points_.rows());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = points_.data() + i * dims();
    double s = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      const double t = row[j] - query[j];
      s += t * t;
    }
    dist[i] = {s, i};
  }
  // Pair ordering compares distance first, then index: ties go to the lower row.
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < k_; ++i) acc += responses_[static_cast<Eigen::Index>(dist[i].second)];
  return acc / static_cast<double>(k_);
}

}  // namespace kagg
