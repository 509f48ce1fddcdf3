#pragma once

#include "kagg/dataset.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace kagg {

class Rng;

/// Uncorrelated: i.i.d. Uniform(-1, 1) inputs.
/// Correlated:   rows i.i.d. N(0, Sigma) with Sigma_ij = 2^{-|i-j|}.
enum class Regime { Uncorrelated, Correlated };

std::string_view regime_name(Regime regime);
Regime parse_regime(std::string_view name);

struct SyntheticModelId {
  int id = 1;  ///< 1..10
  Regime regime = Regime::Uncorrelated;
};

struct ModelShape {
  std::size_t n = 0;
  std::size_t d = 0;
};

/// Default sample size and input dimension of a benchmark model.
ModelShape model_shape(int id);

/// Sigma_ij = 2^{-|i-j|}.
Matrix correlation_matrix(std::size_t d);
/// Lower Cholesky factor of correlation_matrix(d).
Matrix correlation_cholesky(std::size_t d);

Matrix sample_inputs(Regime regime, std::size_t n, std::size_t d, std::uint64_t seed);

/// Deterministic part of the response at one input row. For model 8 this is the latent
/// score that is thresholded after noise; for model 6 it is the count of negative
/// coordinates among the first ten.
double model_signal(int id, std::span<const double> x);

struct GeneratedData {
  Dataset data;
  Vector signal;  ///< pre-noise value per row, see model_signal()
};

/// Draws a dataset with the model's own (n, d).
GeneratedData gen_model(const SyntheticModelId& model, std::uint64_t seed);
/// Same generator with an explicit row count.
GeneratedData gen_model(const SyntheticModelId& model, std::size_t n, std::uint64_t seed);

struct SplitSpec {
  double test_fraction = 0.2;
  double dk_fraction_of_train = 0.5;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train_k;
  std::vector<std::size_t> train_l;
  std::vector<std::size_t> test;
};

struct DataSplit {
  Dataset train_k;  ///< fits the base machines
  Dataset train_l;  ///< aggregation rows
  Dataset test;
};

/// |test| = round(test_fraction n); k = ceil(dk_fraction (n - |test|)); l = the rest.
/// Index sets are sorted and form a partition of 0..n-1.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);
DataSplit split(const Dataset& data, const SplitSpec& spec);

}  // namespace kagg
