#include "kagg/errors.hpp"
#include "kagg/kernels.hpp"
#include "kagg/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

using namespace kagg;

namespace {

const std::array<KernelKind, 7> kAll{KernelKind::Naive,           KernelKind::Epanechnikov, KernelKind::BiWeight,
                                     KernelKind::TriWeight,       KernelKind::CompactGaussian,
                                     KernelKind::Gaussian,        KernelKind::Exp4};

double eval(KernelKind k, std::vector<double> z) { return kernel_eval(KernelSpec{k}, z); }

}  // namespace

TEST_CASE("kernel values at reference points") {
  CHECK(eval(KernelKind::Epanechnikov, {0.0, 0.0, 0.0}) == 1.0);
  CHECK(eval(KernelKind::Naive, {0.5, 0.5}) == 1.0);
  CHECK(eval(KernelKind::Naive, {1.5, 0.0}) == 0.0);
  CHECK(eval(KernelKind::Gaussian, {1.0, 1.0}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(eval(KernelKind::Gaussian, {1.0, 1.0}) == doctest::Approx(0.367879).epsilon(1e-6));
}

TEST_CASE("bandwidth parametrizations") {
  const std::vector<double> z{1.5, 0.0};
  CHECK(kernel_eval_h(KernelSpec{KernelKind::Naive}, Bandwidth{2.0, Parametrization::Divisive}, z) == 1.0);
  const std::vector<double> z2{1.0, 1.0};
  CHECK(kernel_eval_h(KernelSpec{KernelKind::Gaussian}, Bandwidth{1.0, Parametrization::Multiplicative}, z2) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  Rng rng(3);
  for (KernelKind k : kAll) {
    for (int t = 0; t < 20; ++t) {
      const std::vector<double> zero(1 + rng.below(6), 0.0);
      const double h = rng.uniform(1e-3, 50.0);
      CHECK(kernel_eval_h(KernelSpec{k}, Bandwidth{h, Parametrization::Divisive}, zero) == 1.0);
      if (supports_multiplicative(k)) {
        CHECK(kernel_eval_h(KernelSpec{k}, Bandwidth{h, Parametrization::Multiplicative}, zero) == 1.0);
      }
    }
  }
}

TEST_CASE("multiplicative bandwidth is refused for other kernels") {
  const std::vector<double> z{0.1};
  for (KernelKind k : kAll) {
    if (supports_multiplicative(k)) continue;
    CHECK_THROWS_AS(kernel_eval_h(KernelSpec{k}, Bandwidth{1.0, Parametrization::Multiplicative}, z),
                    InvalidArgument);
  }
  CHECK_THROWS_AS(kernel_eval_h(KernelSpec{}, Bandwidth{0.0, Parametrization::Divisive}, z), InvalidArgument);
  CHECK_THROWS_AS(kernel_eval_h(KernelSpec{}, Bandwidth{-1.0, Parametrization::Divisive}, z), InvalidArgument);
}

TEST_CASE("non-finite arguments are rejected") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  for (KernelKind k : kAll) {
    CHECK_THROWS_AS(eval(k, {0.0, nan}), InvalidArgument);
    CHECK_THROWS_AS(eval(k, {inf}), InvalidArgument);
  }
  KernelSpec bad{KernelKind::Gaussian, 0.0, 3.0};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = KernelSpec{KernelKind::CompactGaussian, 1.0, -1.0};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("config names round trip") {
  for (KernelKind k : kAll) CHECK(parse_kernel(kernel_name(k)) == k);
  CHECK(parse_kernel("compact-gaussian") == KernelKind::CompactGaussian);
  CHECK(parse_kernel("exp4") == KernelKind::Exp4);
  CHECK_THROWS_AS(parse_kernel("cauchy"), InvalidConfig);
}

TEST_CASE("kernels match their formulas, stay in [0, 1], are symmetric and vanish off support") {
  Rng rng(11);
  for (int t = 0; t < 4000; ++t) {
    const KernelKind k = kAll[rng.below(kAll.size())];
    std::vector<double> z(1 + rng.below(6));
    for (auto& v : z) v = rng.uniform(-2.0, 2.0);
    const double v = eval(k, z);
    CHECK(v == doctest::Approx(oracle::kernel(k, z)).epsilon(1e-14));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    std::vector<double> neg(z);
    for (auto& x : neg) x = -x;
    CHECK(eval(k, neg) == v);

    const double r = std::sqrt(oracle::norm2(z));
    double mx = 0.0;
    for (double x : z) mx = std::max(mx, std::abs(x));
    if (k == KernelKind::Naive && mx > 1.0) CHECK(v == 0.0);
    if ((k == KernelKind::Epanechnikov || k == KernelKind::BiWeight || k == KernelKind::TriWeight) && r > 1.0) {
      CHECK(v == 0.0);
    }
  }
  const std::vector<double> far{2.0, 2.5};  // |z| > 3
  CHECK(eval(KernelKind::CompactGaussian, far) == 0.0);
}

TEST_CASE("radial kernels are non-increasing in the radius") {
  Rng rng(5);
  for (KernelKind k : kAll) {
    if (k == KernelKind::Naive) continue;
    for (int t = 0; t < 500; ++t) {
      std::vector<double> a(1 + rng.below(5)), b;
      for (auto& v : a) v = rng.uniform(-2.0, 2.0);
      b = a;
      const double grow = 1.0 + rng.uniform();
      for (auto& v : b) v *= grow;
      CHECK(eval(k, a) >= eval(k, b));
    }
  }
}

TEST_CASE("analytic dK/dh at reference points") {
  const KernelSpec g{KernelKind::Gaussian};
  const Bandwidth one{1.0, Parametrization::Multiplicative};
  const std::vector<double> zero{0.0, 0.0};
  CHECK(kernel_grad_h(g, one, zero) == 0.0);
  const std::vector<double> z{1.0, 1.0};
  CHECK(kernel_grad_h(g, one, z) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-14));

  const std::vector<double> z4{1.0};
  CHECK(kernel_grad_h(KernelSpec{KernelKind::Exp4}, Bandwidth{2.0, Parametrization::Multiplicative}, z4) ==
        doctest::Approx(-0.5 * std::exp(-1.0)).epsilon(1e-14));

  for (const auto& fd : {std::make_pair(g, z), std::make_pair(KernelSpec{KernelKind::Exp4}, z4)}) {
    const double h = fd.first.kind == KernelKind::Gaussian ? 1.0 : 2.0;
    const double s = 1e-6;
    const double num = (kernel_eval_h(fd.first, {h + s, Parametrization::Multiplicative}, fd.second) -
                        kernel_eval_h(fd.first, {h - s, Parametrization::Multiplicative}, fd.second)) /
                       (2 * s);
    CHECK(std::abs(num - kernel_grad_h(fd.first, {h, Parametrization::Multiplicative}, fd.second)) <= 1e-8);
  }
}

TEST_CASE("dK/dh is refused without a closed form") {
  const std::vector<double> z{0.3};
  for (KernelKind k : kAll) {
    CHECK_THROWS_AS(kernel_grad_h(KernelSpec{k}, Bandwidth{1.0, Parametrization::Divisive}, z), NotDifferentiable);
  }
}

TEST_CASE("dK/dh agrees with central differences over random draws") {
  Rng rng(2024);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const KernelSpec spec{rng.below(2) == 0 ? KernelKind::Gaussian : KernelKind::Exp4, rng.uniform(0.5, 2.0)};
    const double h = rng.uniform(0.05, 5.0);
    std::vector<double> z(1 + rng.below(5));
    for (auto& v : z) v = rng.uniform(-1.0, 1.0);
    const double s = 1e-6;
    const double num = (kernel_eval_h(spec, {h + s, Parametrization::Multiplicative}, z) -
                        kernel_eval_h(spec, {h - s, Parametrization::Multiplicative}, z)) /
                       (2 * s);
    const double ana = kernel_grad_h(spec, {h, Parametrization::Multiplicative}, z);
    // The difference quotient carries a rounding error of about eps * K / s.
    const double k = kernel_eval_h(spec, {h, Parametrization::Multiplicative}, z);
    CHECK(std::abs(num - ana) <= 1e-6 * std::abs(ana) + 1e-9 * k);
    if (std::abs(ana) > 1e-3 * k) {
      CHECK(std::abs(num - ana) / std::abs(ana) <= 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 800);
}

TEST_CASE("reduced profiles agree with vector evaluation") {
  Rng rng(9);
  for (int t = 0; t < 2000; ++t) {
    const KernelKind k = kAll[rng.below(kAll.size())];
    const KernelSpec spec{k, rng.uniform(0.5, 2.0), rng.uniform(1.0, 4.0)};
    const bool mult = supports_multiplicative(k) && rng.below(2) == 1;
    const Bandwidth bw{rng.uniform(0.1, 3.0), mult ? Parametrization::Multiplicative : Parametrization::Divisive};
    std::vector<double> z(1 + rng.below(5));
    double sq = 0.0, mx = 0.0;
    for (auto& v : z) {
      v = rng.uniform(-3.0, 3.0);
      sq += v * v;
      mx = std::max(mx, std::abs(v));
    }
    const double direct = kernel_eval_h(spec, bw, z);
    CHECK(kernel_profile(spec, bw, sq, mx) == doctest::Approx(direct).epsilon(1e-13));
    if (is_exponential(k) && direct > 0.0) {
      CHECK(std::exp(kernel_log_profile(spec, bw, sq)) == doctest::Approx(direct).epsilon(1e-13));
    }
  }
}
