#pragma once

#include "kagg/dataset.hpp"
#include "kagg/learners/knn.hpp"
#include "kagg/learners/linear.hpp"
#include "kagg/learners/tree.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace kagg {

using LearnerSpec = std::variant<RidgeParams, LassoParams, KnnParams, TreeParams, ForestParams>;

/// Config name of a learner kind: ridge, lasso, knn, tree, rf.
std::string learner_name(const LearnerSpec& spec);

/// A fitted base machine. Immutable once built; predict is safe to call concurrently.
class BaseLearner {
 public:
  using State = std::variant<LinearModel, KnnModel, RegressionTree, RandomForest>;

  /// Fits on `train` without modifying it. `seed` drives internal CV folds and forest sampling.
  static BaseLearner fit(const LearnerSpec& spec, const Dataset& train, std::uint64_t seed);

  double predict(std::span<const double> x) const;

  const LearnerSpec& spec() const { return spec_; }
  const State& state() const { return state_; }
  std::size_t dims() const { return dims_; }
  std::string name() const { return learner_name(spec_); }

 private:
  BaseLearner(LearnerSpec spec, State state, std::size_t dims)
      : spec_(std::move(spec)), state_(std::move(state)), dims_(dims) {}

  LearnerSpec spec_;
  State state_;
  std::size_t dims_ = 0;
};

/// Prediction of every learner (columns) at every row of `points` (rows).
Matrix predict_all(std::span<const BaseLearner> learners, const Matrix& points);

/// Row-by-row serial version of predict_all; the reference for the parallel path.
Matrix predict_all_serial(std::span<const BaseLearner> learners, const Matrix& points);

}  // namespace kagg
