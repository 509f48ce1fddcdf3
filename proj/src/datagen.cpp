#include "kagg/datagen.hpp"

#include "kagg/errors.hpp"
#include "kagg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace kagg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double indicator(bool b) { return b ? 1.0 : 0.0; }

// Model 10 raises inputs to powers up to d; long double keeps |x|^j finite for any
// realistic Gaussian draw, and cos/sin of the result are then bounded.
double model10_signal(std::span<const double> x) {
  double s = std::exp(x[0]) + std::exp(-x[0]);
  for (std::size_t j = 2; j <= x.size(); ++j) {
    const long double xj = x[j - 1];
    const long double p = std::pow(xj, static_cast<long double>(j));
    s += static_cast<double>(std::cos(p) - 2.0L * std::sin(p)) - std::exp(-std::abs(x[j - 1]));
  }
  return s;
}

// Noise standard deviation added outside the signal (0 when the model has none there).
double exterior_noise_sd(int id) {
  switch (id) {
    case 2: case 3: case 4: case 7: return 0.5;
    case 5: return 0.05;
    default: return 0.0;
  }
}

void sample_row(Regime regime, const Matrix& chol, Rng& rng, std::span<double> out,
                std::vector<double>& z) {
  if (regime == Regime::Uncorrelated) {
    for (double& v : out) v = rng.uniform(-1.0, 1.0);
    return;
  }
  const std::size_t d = out.size();
  z.resize(d);
  for (double& v : z) v = rng.normal();
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    const double* li = chol.data() + i * d;
    for (std::size_t j = 0; j <= i; ++j) acc += li[j] * z[j];
    out[i] = acc;
  }
}

}  // namespace

std::string_view regime_name(Regime regime) {
  return regime == Regime::Uncorrelated ? "uncorrelated" : "correlated";
}

Regime parse_regime(std::string_view name) {
  if (name == "uncorrelated") return Regime::Uncorrelated;
  if (name == "correlated") return Regime::Correlated;
  throw InvalidConfig("unknown regime '" + std::string(name) + "'");
}

ModelShape model_shape(int id) {
  switch (id) {
    case 1: return {800, 50};
    case 2: return {600, 100};
    case 3: return {600, 100};
    case 4: return {600, 100};
    case 5: return {700, 20};
    case 6: return {500, 30};
    case 7: return {600, 300};
    case 8: return {600, 50};
    case 9: return {500, 1000};
    case 10: return {500, 1500};
    default: throw InvalidArgument("unknown model id " + std::to_string(id));
  }
}

Matrix correlation_matrix(std::size_t d) {
  Matrix sigma(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto gap = static_cast<int>(i > j ? i - j : j - i);
      sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::ldexp(1.0, -gap);
    }
  }
  return sigma;
}

Matrix correlation_cholesky(std::size_t d) {
  Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(correlation_matrix(d)));
  if (llt.info() != Eigen::Success) throw InvalidArgument("correlation matrix is not positive definite");
  return Matrix(llt.matrixL());
}

Matrix sample_inputs(Regime regime, std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidArgument("sample_inputs: n and d must be positive");
  const Matrix chol = regime == Regime::Correlated ? correlation_cholesky(d) : Matrix();
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Rng rng(seed);
  std::vector<double> z;
  for (std::size_t i = 0; i < n; ++i) {
    sample_row(regime, chol, rng, {x.data() + i * d, d}, z);
  }
  return x;
}

double model_signal(int id, std::span<const double> x) {
  const ModelShape shape = model_shape(id);
  if (x.size() < std::min<std::size_t>(shape.d, 18)) {
    throw InvalidArgument("model_signal: input has too few coordinates");
  }
  auto X = [&](std::size_t k) { return x[k - 1]; };
  switch (id) {
    case 1:
      return X(1) * X(1) + std::exp(-X(2) * X(2));
    case 2:
      return X(1) * X(2) + X(3) * X(3) - X(4) * X(7) + X(8) * X(10) - X(6) * X(6);
    case 3:
      return -std::sin(2.0 * X(1)) + X(2) * X(2) + X(3) - std::exp(-X(4));
    case 4: {
      const double s3 = std::sin(kTwoPi * X(3));
      const double s4 = std::sin(kTwoPi * X(4));
      const double c4 = std::cos(kTwoPi * X(4));
      return X(1) + (2.0 * X(2) - 1.0) * (2.0 * X(2) - 1.0) + s3 / (2.0 - s3) + s4 + 2.0 * c4 +
             3.0 * s4 * s4 + 4.0 * c4 * c4;
    }
    case 5:
      return indicator(X(1) > 0.0) + X(2) * X(2) * X(2) +
             indicator(X(4) + X(6) - X(8) - X(9) > 1.0 + X(14)) + std::exp(-X(2) * X(2));
    case 6: {
      double s = 0.0;
      for (std::size_t k = 1; k <= 10; ++k) s += indicator(X(k) < 0.0);
      return s;
    }
    case 7:
      return X(1) * X(1) + X(2) * X(2) * X(3) * std::exp(-std::abs(X(4))) + X(6) - X(8);
    case 8:
      return X(1) + X(4) * X(4) * X(4) + X(9) + std::sin(X(12) * X(18));
    case 9:
      return X(1) + 3.0 * X(3) * X(3) - 2.0 * std::exp(-X(5)) + X(6);
    case 10:
      return model10_signal(x);
    default:
      throw InvalidArgument("unknown model id " + std::to_string(id));
  }
}

GeneratedData gen_model(const SyntheticModelId& model, std::uint64_t seed) {
  return gen_model(model, model_shape(model.id).n, seed);
}

GeneratedData gen_model(const SyntheticModelId& model, std::size_t n, std::uint64_t seed) {
  const ModelShape shape = model_shape(model.id);
  if (n < 1) throw InvalidArgument("gen_model: n must be positive");
  const std::size_t d = shape.d;
  const Matrix chol = model.regime == Regime::Correlated ? correlation_cholesky(d) : Matrix();

  GeneratedData out;
  out.data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  out.data.responses.resize(static_cast<Eigen::Index>(n));
  out.signal.resize(static_cast<Eigen::Index>(n));

  Rng input_rng(derive_seed(seed, 0));
  Rng noise_rng(derive_seed(seed, 1));
  std::vector<double> z;
  const double sd = exterior_noise_sd(model.id);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> row(out.data.features.data() + i * d, d);
    double signal = 0.0;
    // Redraw rows whose signal is not representable; n stays exact.
    for (int attempt = 0;; ++attempt) {
      sample_row(model.regime, chol, input_rng, row, z);
      signal = model_signal(model.id, row);
      if (std::isfinite(signal)) break;
      if (attempt >= 1000) throw InvalidArgument("gen_model: could not draw a finite row");
    }
    double y = signal;
    if (model.id == 6) {
      y -= indicator(noise_rng.normal() > 1.25);
    } else if (model.id == 8) {
      y = indicator(signal + noise_rng.normal(0.0, 0.01) > 0.38);
    } else if (sd > 0.0) {
      y += noise_rng.normal(0.0, sd);
    }
    out.signal[static_cast<Eigen::Index>(i)] = signal;
    out.data.responses[static_cast<Eigen::Index>(i)] = y;
  }
  return out;
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) ||
      !(spec.dk_fraction_of_train > 0.0 && spec.dk_fraction_of_train < 1.0)) {
    throw InvalidArgument("split fractions must lie strictly inside (0, 1)");
  }
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  const std::size_t rest = n - std::min(n, n_test);
  const auto n_k = static_cast<std::size_t>(
      std::ceil(spec.dk_fraction_of_train * static_cast<double>(rest) - 1e-9));
  if (n_test == 0 || n_test >= n || n_k == 0 || n_k >= rest) {
    throw InvalidArgument("split of " + std::to_string(n) + " rows leaves an empty part");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));

  SplitIndices out;
  out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train_k.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                     order.begin() + static_cast<std::ptrdiff_t>(n_test + n_k));
  out.train_l.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_k), order.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.train_k.begin(), out.train_k.end());
  std::sort(out.train_l.begin(), out.train_l.end());
  return out;
}

DataSplit split(const Dataset& data, const SplitSpec& spec) {
  data.validate();
  const SplitIndices idx = split_indices(data.rows(), spec);
  return {data.subset(idx.train_k), data.subset(idx.train_l), data.subset(idx.test)};
}

}  // namespace kagg
