#include "kagg/validation.hpp"

#include "kagg/aggregation.hpp"
#include "kagg/bandwidth_opt.hpp"
#include "kagg/datagen.hpp"
#include "kagg/learners/knn.hpp"
#include "kagg/parallel.hpp"
#include "kagg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace kagg {

namespace {

PredictionMatrix random_instance(Rng& rng, std::size_t rows, std::size_t models) {
  PredictionMatrix pm;
  pm.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(models));
  pm.responses.resize(static_cast<Eigen::Index>(rows));
  for (Eigen::Index i = 0; i < pm.values.rows(); ++i) {
    const double y = rng.uniform(-2.0, 2.0);
    pm.responses[i] = y + rng.normal(0.0, 0.3);
    for (Eigen::Index m = 0; m < pm.values.cols(); ++m) pm.values(i, m) = y + rng.normal(0.0, 0.5);
  }
  return pm;
}

WeightScheme random_scheme(Rng& rng, std::size_t models) {
  const double h = std::exp(rng.uniform(std::log(0.05), std::log(5.0)));
  const auto pick = rng.below(4);
  if (pick == 0) return CobraFull{h};
  if (pick == 1) {
    const double alpha = static_cast<double>(1 + rng.below(models)) / static_cast<double>(models);
    return CobraRelaxed{h, alpha};
  }
  const auto kind = static_cast<KernelKind>(rng.below(7));
  const bool mult = supports_multiplicative(kind) && rng.below(2) == 1;
  const Bandwidth bw{h, mult ? Parametrization::Multiplicative : Parametrization::Divisive};
  if (pick == 2) return KernelVector{KernelSpec{kind}, bw};
  return KernelPerCoord{KernelSpec{kind}, Bandwidth{h, Parametrization::Divisive}};
}

struct Tally {
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  std::string first_failure;

  void record(bool ok, double measure, const std::string& what) {
    ++trials;
    worst = std::max(worst, measure);
    if (!ok) {
      if (failures == 0) first_failure = what;
      ++failures;
    }
  }

  CheckResult result(std::string name) const {
    std::ostringstream d;
    d << trials << " trials, worst " << worst;
    if (failures > 0) d << ", " << failures << " failed (first: " << first_failure << ")";
    return {std::move(name), failures == 0 && trials > 0, d.str()};
  }
};

CheckResult check_weights(std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  Tally t;
  for (std::size_t k = 0; k < instances * 50; ++k) {
    const std::size_t models = 1 + rng.below(5);
    const PredictionMatrix pm = random_instance(rng, 5 + rng.below(40), models);
    const WeightScheme s = random_scheme(rng, models);
    std::vector<double> q(models);
    for (auto& v : q) v = rng.uniform(-3.0, 3.0);
    const Vector w = weights(s, pm, q);
    const double sum = w.sum();
    const bool nonneg = (w.array() >= 0.0).all();
    const double dev = std::min(std::abs(sum - 1.0), std::abs(sum));
    t.record(nonneg && dev <= 1e-12, dev, scheme_name(s) + " sum=" + std::to_string(sum));
  }
  return t.result("weights are non-negative and sum to 1 or are all zero");
}

CheckResult check_cobra_equivalence(std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  Tally t;
  for (std::size_t k = 0; k < instances * 10; ++k) {
    const std::size_t models = 1 + rng.below(5);
    const PredictionMatrix pm = random_instance(rng, 5 + rng.below(40), models);
    const double h = rng.uniform(0.05, 3.0);
    std::vector<double> q(models);
    for (auto& v : q) v = rng.uniform(-3.0, 3.0);
    const Vector a = weights(CobraFull{h}, pm, q);
    const Vector b = weights(CobraRelaxed{h, 1.0}, pm, q);
    t.record(a == b, (a - b).cwiseAbs().maxCoeff(), "h=" + std::to_string(h));
  }
  return t.result("cobra with full agreement equals relaxed cobra at alpha = 1");
}

CheckResult check_cv_reference(std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  Tally t;
  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t models = 1 + rng.below(5);
    const std::size_t rows = 12 + rng.below(39);
    const PredictionMatrix pm = random_instance(rng, rows, models);
    const WeightScheme s = random_scheme(rng, models);
    const CvObjective obj(pm, s, 2 + rng.below(4), rng.next());
    const double h = scheme_bandwidth(s);
    const double a = obj.value(h), b = obj.value_reference(h);
    const double rel = std::abs(a - b) / std::max(1e-300, std::abs(b));
    t.record(rel <= 1e-12, rel, scheme_name(s));
  }
  return t.result("parallel cv error matches the fold-by-fold reference");
}

CheckResult check_gradient(std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  Tally t;
  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t models = 1 + rng.below(5);
    const PredictionMatrix pm = random_instance(rng, 12 + rng.below(39), models);
    const KernelKind kind = rng.below(2) == 0 ? KernelKind::Gaussian : KernelKind::Exp4;
    const CvObjective obj(pm, KernelVector{KernelSpec{kind}, Bandwidth{1.0, Parametrization::Multiplicative}},
                          2 + rng.below(4), rng.next());
    const double h = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
    const double analytic = obj.value_and_gradient(h).gradient;
    const double pairwise = obj.gradient_reference(h);
    const double numeric = cv_grad(obj, h, NumericalGradient{});
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6 * obj.value(h)});
    const double rel_num = std::abs(analytic - numeric) / scale;
    const double rel_ref = std::abs(analytic - pairwise) / std::max(std::abs(pairwise), 1e-300);
    t.record(rel_num <= 1e-4 && (rel_ref <= 1e-9 || std::abs(analytic - pairwise) <= 1e-12),
             rel_num, "h=" + std::to_string(h));
  }
  return t.result("analytic bandwidth gradient matches pairwise sum and central differences");
}

CheckResult check_batch_predict(std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  Tally t;
  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t models = 1 + rng.below(5);
    const PredictionMatrix pm = random_instance(rng, 10 + rng.below(60), models);
    const WeightScheme s = random_scheme(rng, models);
    const std::size_t half = pm.rows() / 2;
    std::vector<std::size_t> a(half), b(pm.rows() - half);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), half);
    const HoldoutObjective holdout(pm.subset(a), pm.subset(b), s);
    const double hv = holdout.value(scheme_bandwidth(s)), hr = holdout.value_reference(scheme_bandwidth(s));
    bool same = std::abs(hv - hr) <= 1e-12 * std::max(1.0, std::abs(hr));
    const CvObjective obj(pm, s, 3, 1);
    const int saved = max_threads();
    set_threads(1);
    const double one = obj.value(scheme_bandwidth(s));
    set_threads(4);
    const double many = obj.value(scheme_bandwidth(s));
    set_threads(saved);
    same = same && one == many;
    t.record(same, same ? 0.0 : 1.0, scheme_name(s));
  }
  return t.result("parallel paths match serial references at any thread count");
}

CheckResult check_knn(std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  Tally t;
  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t n = 5 + rng.below(196), d = 1 + rng.below(6);
    Dataset data;
    data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    data.responses.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < data.features.size(); ++i) data.features.data()[i] = rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < data.responses.size(); ++i) data.responses[i] = rng.normal();
    const std::size_t kk = 1 + rng.below(std::min<std::size_t>(n, 15));
    const KnnModel model(data, KnnParams{kk, false});
    std::vector<double> x(d);
    for (auto& v : x) v = rng.uniform(-1.2, 1.2);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - x[j];
        s += diff * diff;
      }
      dist.emplace_back(s, i);
    }
    std::sort(dist.begin(), dist.end());
    double expect = 0.0;
    for (std::size_t i = 0; i < kk; ++i) expect += data.responses[static_cast<Eigen::Index>(dist[i].second)];
    expect /= static_cast<double>(kk);
    const double err = std::abs(model.predict(x) - expect);
    t.record(err <= 1e-12 * std::max(1.0, std::abs(expect)), err, "n=" + std::to_string(n));
  }
  return t.result("knn matches a linear scan");
}

CheckResult check_split(std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  Tally t;
  for (std::size_t k = 0; k < instances * 5; ++k) {
    const std::size_t n = 10 + rng.below(2000);
    const SplitIndices s = split_indices(n, SplitSpec{0.2, 0.5, rng.next()});
    std::vector<std::size_t> all;
    all.insert(all.end(), s.train_k.begin(), s.train_k.end());
    all.insert(all.end(), s.train_l.begin(), s.train_l.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(n);
    std::iota(expect.begin(), expect.end(), 0);
    t.record(all == expect, 0.0, "n=" + std::to_string(n));
  }
  return t.result("splits partition the rows");
}

}  // namespace

std::vector<CheckResult> run_validation_suite(std::uint64_t seed, std::size_t instances) {
  std::vector<CheckResult> out;
  const std::vector<std::function<CheckResult(std::uint64_t, std::size_t)>> checks{
      check_weights, check_cobra_equivalence, check_cv_reference, check_gradient,
      check_batch_predict, check_knn, check_split};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    try {
      out.push_back(checks[i](derive_seed(seed, i), instances));
    } catch (const std::exception& e) {
      out.push_back({"check " + std::to_string(i), false, std::string("threw: ") + e.what()});
    }
  }
  return out;
}

}  // namespace kagg
