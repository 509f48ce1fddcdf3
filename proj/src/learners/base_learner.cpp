#include "kagg/learners/base_learner.hpp"

#include "kagg/errors.hpp"

namespace kagg {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_learners(std::span<const BaseLearner> learners, const Matrix& points) {
  if (learners.empty()) throw InvalidArgument("predict_all: empty learner list");
  for (const auto& l : learners) {
    if (l.dims() != static_cast<std::size_t>(points.cols())) {
      throw InvalidArgument("predict_all: learner dimension does not match points");
    }
  }
}

}  // namespace

std::string learner_name(const LearnerSpec& spec) {
  return std::visit(Overloaded{
                        [](const RidgeParams&) { return std::string("ridge"); },
                        [](const LassoParams&) { return std::string("lasso"); },
                        [](const KnnParams&) { return std::string("knn"); },
                        [](const TreeParams&) { return std::string("tree"); },
                        [](const ForestParams&) { return std::string("rf"); },
                    },
                    spec);
}

BaseLearner BaseLearner::fit(const LearnerSpec& spec, const Dataset& train, std::uint64_t seed) {
  train.validate();
  State state = std::visit(
      Overloaded{
          [&](const RidgeParams& p) -> State { return fit_ridge(train, p, seed); },
          [&](const LassoParams& p) -> State { return fit_lasso(train, p, seed); },
          [&](const KnnParams& p) -> State { return KnnModel(train, p); },
          [&](const TreeParams& p) -> State {
            std::vector<std::size_t> rows(train.rows());
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
            return RegressionTree::grow(train, rows, p);
          },
          [&](const ForestParams& p) -> State { return RandomForest(train, p, seed); },
      },
      spec);
  return BaseLearner(spec, std::move(state), train.dims());
}

double BaseLearner::predict(std::span<const double> x) const {
  if (x.size() != dims_) throw InvalidArgument("predict: dimension mismatch");
  return std::visit([&](const auto& model) { return model.predict(x); }, state_);
}

Matrix predict_all(std::span<const BaseLearner> learners, const Matrix& points) {
  check_learners(learners, points);
  const auto rows = points.rows();
  const auto m = static_cast<Eigen::Index>(learners.size());
  Matrix out(rows, m);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      out(i, k) = learners[static_cast<std::size_t>(k)].predict(row_span(points, i));
    }
  }
  return out;
}

Matrix predict_all_serial(std::span<const BaseLearner> learners, const Matrix& points) {
  check_learners(learners, points);
  Matrix out(points.rows(), static_cast<Eigen::Index>(learners.size()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (std::size_t k = 0; k < learners.size(); ++k) {
      out(i, static_cast<Eigen::Index>(k)) = learners[k].predict(row_span(points, i));
    }
  }
  return out;
}

}  // namespace kagg
