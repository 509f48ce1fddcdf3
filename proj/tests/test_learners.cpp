#include "kagg/errors.hpp"
#include "kagg/learners/base_learner.hpp"
#include "kagg/learners/standardizer.hpp"
#include "kagg/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace kagg;

namespace {

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d, double noise = 0.1) {
  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.responses.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    double y = 0.0;
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      data.features(i, j) = rng.uniform(-1.0, 1.0);
      y += static_cast<double>(j + 1) * data.features(i, j);
    }
    data.responses[i] = y + rng.normal(0.0, noise);
  }
  return data;
}

}  // namespace

TEST_CASE("standardizer uses population statistics and keeps constant columns finite") {
  Matrix x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const Standardizer s(x);
  CHECK(s.mean()[0] == 2.5);
  CHECK(s.scale()[0] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(s.scale()[1] == 1.0);
  const Matrix z = s.transform(x);
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
  CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ridge with lambda 0 recovers a noiseless line") {
  Dataset data;
  data.features.resize(20, 1);
  data.responses.resize(20);
  for (int i = 0; i < 20; ++i) {
    data.features(i, 0) = -1.0 + 0.1 * i;
    data.responses[i] = 2.0 * data.features(i, 0) + 1.0;
  }
  const LinearModel m = fit_ridge(data, RidgeParams{0.0, 5}, 1);
  CHECK(std::abs(m.raw_slope()[0] - 2.0) <= 1e-8);
  CHECK(std::abs(m.raw_intercept() - 1.0) <= 1e-8);
  const std::vector<double> x{0.35};
  CHECK(std::abs(m.predict(x) - 1.7) <= 1e-8);
}

TEST_CASE("ridge with lambda 0 matches least squares on random data") {
  Rng rng(4);
  const Dataset data = random_dataset(rng, 60, 5, 0.3);
  Eigen::MatrixXd a(60, 6);
  a.leftCols(5) = data.features;
  a.col(5).setOnes();
  const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(data.responses);
  const LinearModel m = fit_ridge(data, RidgeParams{0.0, 5}, 1);
  for (int j = 0; j < 5; ++j) CHECK(std::abs(m.raw_slope()[j] - beta[j]) <= 1e-9);
  CHECK(std::abs(m.raw_intercept() - beta[5]) <= 1e-9);
}

TEST_CASE("ridge with a huge penalty predicts the mean response") {
  Rng rng(5);
  const Dataset data = random_dataset(rng, 40, 3);
  const LinearModel m = fit_ridge(data, RidgeParams{1e12, 5}, 1);
  const std::vector<double> x{0.9, -0.9, 0.5};
  CHECK(std::abs(m.predict(x) - data.responses.mean()) <= 1e-9);
}

TEST_CASE("ridge handles more features than rows") {
  Rng rng(6);
  const Dataset data = random_dataset(rng, 15, 40);
  const LinearModel m = fit_ridge(data, RidgeParams{}, 3);
  for (Eigen::Index i = 0; i < 15; ++i) CHECK(std::isfinite(m.predict(row_span(data.features, i))));
  CHECK(m.lambda() > 0.0);
}

TEST_CASE("lasso at lambda_max returns all zeros") {
  Rng rng(8);
  const Dataset data = random_dataset(rng, 50, 6);
  const Standardizer s(data.features);
  const Matrix z = s.transform(data.features);
  const Vector y = data.responses.array() - data.responses.mean();
  const double lambda_max = (z.transpose() * y).cwiseAbs().maxCoeff() / 50.0;
  const auto at = lasso_coordinate_descent(z, y, lambda_max, Vector::Zero(6), 1e-10, 1000);
  CHECK(at.coef.cwiseAbs().maxCoeff() == 0.0);
  const auto above = lasso_coordinate_descent(z, y, 2.0 * lambda_max, Vector::Ones(6), 1e-10, 1000);
  CHECK(above.coef.cwiseAbs().maxCoeff() == 0.0);
  const auto below = lasso_coordinate_descent(z, y, 0.9 * lambda_max, Vector::Zero(6), 1e-10, 1000);
  CHECK(below.coef.cwiseAbs().maxCoeff() > 0.0);

  const LinearModel m = fit_lasso(data, LassoParams{10.0 * lambda_max, 1e-7, 10000, 5}, 1);
  CHECK(m.coefficients().cwiseAbs().maxCoeff() == 0.0);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  CHECK(m.predict(x) == doctest::Approx(data.responses.mean()).epsilon(1e-12));
}

TEST_CASE("lasso objective never increases across sweeps") {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 20 + rng.below(60), d = 1 + rng.below(30);
    const Dataset data = random_dataset(rng, n, d, 0.5);
    const Matrix z = Standardizer(data.features).transform(data.features);
    const Vector y = data.responses.array() - data.responses.mean();
    const double lambda_max = (z.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(n);
    const double lambda = lambda_max * std::exp(rng.uniform(std::log(1e-3), 0.0));
    std::vector<double> objective{lasso_objective(z, y, Vector::Zero(static_cast<Eigen::Index>(d)), lambda)};
    const auto res = lasso_coordinate_descent(z, y, lambda, Vector::Zero(static_cast<Eigen::Index>(d)), 1e-9, 100000,
                                              [&](const Vector& c) { objective.push_back(lasso_objective(z, y, c, lambda)); });
    CHECK(res.converged);
    for (std::size_t k = 1; k < objective.size(); ++k) CHECK(objective[k] <= objective[k - 1] + 1e-12);
  }
}

TEST_CASE("lasso solution satisfies the optimality conditions") {
  Rng rng(13);
  const Dataset data = random_dataset(rng, 80, 10, 0.5);
  const Matrix z = Standardizer(data.features).transform(data.features);
  const Vector y = data.responses.array() - data.responses.mean();
  const double lambda = 0.05;
  const auto res = lasso_coordinate_descent(z, y, lambda, Vector::Zero(10), 1e-12, 10000);
  const Vector grad = z.transpose() * (y - z * res.coef) / 80.0;
  for (int j = 0; j < 10; ++j) {
    if (res.coef[j] != 0.0) {
      CHECK(std::abs(grad[j] - lambda * (res.coef[j] > 0 ? 1.0 : -1.0)) <= 1e-6);
    } else {
      CHECK(std::abs(grad[j]) <= lambda + 1e-6);
    }
  }
}

TEST_CASE("knn with k = 1 returns a training point's own response") {
  Rng rng(20);
  const Dataset data = random_dataset(rng, 50, 3);
  const KnnModel m(data, KnnParams{1, true});
  for (Eigen::Index i = 0; i < 50; ++i) CHECK(m.predict(row_span(data.features, i)) == data.responses[i]);
}

TEST_CASE("knn matches a brute-force scan") {
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng.below(200), d = 1 + rng.below(5);
    const Dataset data = random_dataset(rng, n, d);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(n, 10));
    const KnnModel m(data, KnnParams{k, false});
    for (int q = 0; q < 10; ++q) {
      std::vector<double> x(d);
      for (auto& v : x) v = rng.uniform(-1.2, 1.2);
      CHECK(m.predict(x) == doctest::Approx(oracle::knn(data.features, data.responses, x, k)).epsilon(1e-13));
    }
  }
}

TEST_CASE("knn ties go to the lower row index") {
  Dataset data;
  data.features.resize(4, 1);
  data.features << 1.0, -1.0, 1.0, 3.0;
  data.responses.resize(4);
  data.responses << 10.0, 20.0, 30.0, 40.0;
  const KnnModel m(data, KnnParams{1, false});
  const std::vector<double> x{0.0};  // rows 0 and 1 are both at distance 1
  CHECK(m.predict(x) == 10.0);
  const KnnModel m2(data, KnnParams{2, false});
  const std::vector<double> x2{1.0};  // rows 0 and 2 at distance 0
  CHECK(m2.predict(x2) == 20.0);
}

TEST_CASE("knn clamps k above n") {
  Rng rng(22);
  const Dataset data = random_dataset(rng, 4, 2);
  const KnnModel m(data, KnnParams{10, true});
  CHECK(m.clamped());
  CHECK(m.k() == 4);
  const std::vector<double> x{0.0, 0.0};
  CHECK(m.predict(x) == doctest::Approx(data.responses.mean()).epsilon(1e-14));
}

TEST_CASE("tree on constant responses predicts the constant") {
  Rng rng(30);
  Dataset data = random_dataset(rng, 50, 4);
  data.responses.setConstant(3.25);
  const BaseLearner t = BaseLearner::fit(TreeParams{}, data, 1);
  for (int q = 0; q < 20; ++q) {
    const std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    CHECK(t.predict(x) == 3.25);
  }
}

TEST_CASE("tree leaves respect min_leaf and predictions stay in the response range") {
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    const Dataset data = random_dataset(rng, 30 + rng.below(200), 1 + rng.below(6), 0.5);
    const TreeParams params{1 + rng.below(10), rng.below(10)};
    std::vector<std::size_t> rows(data.rows());
    std::iota(rows.begin(), rows.end(), 0);
    const RegressionTree tree = RegressionTree::grow(data, rows, params);
    for (const auto& node : tree.nodes()) {
      if (node.feature < 0) CHECK(node.count >= params.min_leaf);
    }
    const double lo = data.responses.minCoeff(), hi = data.responses.maxCoeff();
    for (int q = 0; q < 50; ++q) {
      std::vector<double> x(data.dims());
      for (auto& v : x) v = rng.uniform(-1.5, 1.5);
      const double p = tree.predict(x);
      CHECK(p >= lo);
      CHECK(p <= hi);
    }
  }
}

TEST_CASE("tree leaf values are means of the training rows that reach them") {
  Rng rng(32);
  const Dataset data = random_dataset(rng, 120, 3, 0.5);
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), 0);
  const RegressionTree tree = RegressionTree::grow(data, rows, TreeParams{5, 4});
  const auto& nodes = tree.nodes();
  std::vector<double> sum(nodes.size(), 0.0);
  std::vector<std::size_t> count(nodes.size(), 0);
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    std::uint32_t k = 0;
    while (nodes[k].feature >= 0) {
      k = data.features(i, nodes[k].feature) <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
    }
    sum[k] += data.responses[i];
    ++count[k];
  }
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].feature >= 0) continue;
    CHECK(count[k] == nodes[k].count);
    CHECK(nodes[k].value == doctest::Approx(sum[k] / static_cast<double>(count[k])).epsilon(1e-12));
  }
}

TEST_CASE("a single split picks the largest variance reduction") {
  Dataset data;
  data.features.resize(8, 2);
  data.responses.resize(8);
  for (int i = 0; i < 8; ++i) {
    data.features(i, 0) = i;                  // step at 3.5
    data.features(i, 1) = (i * 5) % 8;        // scrambled
    data.responses[i] = i < 4 ? 0.0 : 10.0;
  }
  std::vector<std::size_t> rows(8);
  std::iota(rows.begin(), rows.end(), 0);
  const RegressionTree tree = RegressionTree::grow(data, rows, TreeParams{1, 1});
  REQUIRE(tree.nodes().size() == 3);
  CHECK(tree.nodes()[0].feature == 0);
  CHECK(tree.nodes()[0].threshold == 3.5);
}

TEST_CASE("forest is deterministic under its seed and averages its trees") {
  Rng rng(40);
  const Dataset data = random_dataset(rng, 80, 6, 0.3);
  const ForestParams one{1, std::nullopt, 2, 0, std::nullopt};
  const RandomForest a(data, one, 99), b(data, one, 99);
  const ForestParams many{25, std::nullopt, 2, 0, std::nullopt};
  const RandomForest f(data, many, 7);
  REQUIRE(f.trees().size() == 25);
  for (int q = 0; q < 30; ++q) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform(-1, 1);
    CHECK(a.predict(x) == b.predict(x));
    double s = 0.0;
    for (const auto& t : f.trees()) s += t.predict(x);
    CHECK(f.predict(x) == doctest::Approx(s / 25.0).epsilon(1e-14));
    CHECK(f.predict(x) >= data.responses.minCoeff());
    CHECK(f.predict(x) <= data.responses.maxCoeff());
  }
  const RandomForest other(data, one, 100);
  bool differs = false;
  for (Eigen::Index i = 0; i < 80 && !differs; ++i) {
    differs = other.predict(row_span(data.features, i)) != a.predict(row_span(data.features, i));
  }
  CHECK(differs);
}

TEST_CASE("fitting does not touch the training data") {
  Rng rng(50);
  const Dataset data = random_dataset(rng, 60, 4);
  const Dataset copy = data;
  for (const LearnerSpec& s : std::vector<LearnerSpec>{RidgeParams{}, LassoParams{}, KnnParams{}, TreeParams{},
                                                       ForestParams{20, std::nullopt, 2, 0, std::nullopt}}) {
    const BaseLearner l = BaseLearner::fit(s, data, 3);
    CHECK(data.features == copy.features);
    CHECK(data.responses == copy.responses);
    CHECK(l.dims() == 4);
  }
}

TEST_CASE("learner names and dimension checks") {
  CHECK(learner_name(RidgeParams{}) == "ridge");
  CHECK(learner_name(LassoParams{}) == "lasso");
  CHECK(learner_name(KnnParams{}) == "knn");
  CHECK(learner_name(TreeParams{}) == "tree");
  CHECK(learner_name(ForestParams{}) == "rf");
  Rng rng(51);
  const Dataset data = random_dataset(rng, 30, 3);
  const BaseLearner l = BaseLearner::fit(KnnParams{}, data, 1);
  const std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(l.predict(wrong), InvalidArgument);
  Dataset empty;
  CHECK_THROWS_AS(BaseLearner::fit(RidgeParams{}, empty, 1), InvalidArgument);
}

TEST_CASE("predict_all: shape, column order, row permutation, serial agreement") {
  Rng rng(60);
  const Dataset data = random_dataset(rng, 70, 4);
  std::vector<BaseLearner> ls;
  for (const LearnerSpec& s : std::vector<LearnerSpec>{RidgeParams{}, LassoParams{}, KnnParams{}, TreeParams{},
                                                       ForestParams{15, std::nullopt, 2, 0, std::nullopt}}) {
    ls.push_back(BaseLearner::fit(s, data, 2));
  }
  const Matrix pts = data.features.topRows(10);
  const Matrix p = predict_all(ls, pts);
  REQUIRE(p.rows() == 10);
  REQUIRE(p.cols() == 5);
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (Eigen::Index m = 0; m < 5; ++m) CHECK(p(i, m) == ls[static_cast<std::size_t>(m)].predict(row_span(pts, i)));
  }
  CHECK(predict_all_serial(ls, pts) == p);

  const Matrix single = predict_all(std::span<const BaseLearner>(ls.data(), 1), pts.topRows(1));
  CHECK(single.rows() == 1);
  CHECK(single(0, 0) == ls[0].predict(row_span(pts, 0)));

  std::vector<Eigen::Index> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<Eigen::Index>(perm));
  const Matrix shuffled = pts(perm, Eigen::all);
  const Matrix ps = predict_all(ls, shuffled);
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(ps.row(i) == p.row(perm[static_cast<std::size_t>(i)]));

  CHECK_THROWS_AS(predict_all(std::span<const BaseLearner>(), pts), InvalidArgument);
}

TEST_CASE("learners beat the mean on a smooth signal") {
  Rng rng(70);
  const Dataset train = random_dataset(rng, 300, 3, 0.3);
  const Dataset test = random_dataset(rng, 200, 3, 0.3);
  const double var = (test.responses.array() - test.responses.mean()).square().mean();
  for (const LearnerSpec& s : std::vector<LearnerSpec>{RidgeParams{}, LassoParams{}, KnnParams{}, TreeParams{},
                                                       ForestParams{50, std::nullopt, 2, 0, std::nullopt}}) {
    const BaseLearner l = BaseLearner::fit(s, train, 1);
    double mse = 0.0;
    for (Eigen::Index i = 0; i < test.features.rows(); ++i) {
      const double r = l.predict(row_span(test.features, i)) - test.responses[i];
      mse += r * r;
    }
    mse /= static_cast<double>(test.rows());
    CHECK_MESSAGE(mse < 0.5 * var, learner_name(s));
  }
}
