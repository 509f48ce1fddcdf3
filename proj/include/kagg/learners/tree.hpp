#pragma once

#include "kagg/dataset.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace kagg {

class Rng;

struct TreeParams {
  std::size_t min_leaf = 5;
  std::size_t max_depth = 12;  ///< 0 means unlimited
};

struct ForestParams {
  std::size_t n_trees = 300;
  std::optional<std::size_t> mtry;  ///< unset: ceil(d / 3)
  std::size_t min_leaf = 2;
  std::size_t max_depth = 0;
  std::optional<std::uint64_t> seed;  ///< overrides the seed passed to fit
};

/// CART regression tree grown by greedy variance reduction.
class RegressionTree {
 public:
  struct Node {
    // Leaf when feature < 0.
    int feature = -1;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;
    std::uint32_t count = 0;
  };

  RegressionTree() = default;

  /// Grows on the rows listed in `rows` (duplicates allowed, e.g. a bootstrap sample).
  /// When `mtry` is set and `rng` given, each split considers a fresh random feature subset.
  static RegressionTree grow(const Dataset& data, std::span<const std::size_t> rows,
                             const TreeParams& params, std::optional<std::size_t> mtry = {},
                             Rng* rng = nullptr);

  double predict(std::span<const double> x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t dims() const { return dims_; }

 private:
  std::vector<Node> nodes_;
  std::size_t dims_ = 0;
};

/// Bagged trees: bootstrap rows per tree and feature subsampling per split.
class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(const Dataset& train, const ForestParams& params, std::uint64_t seed);

  double predict(std::span<const double> x) const;

  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::size_t dims() const { return dims_; }

 private:
  std::vector<RegressionTree> trees_;
  std::size_t dims_ = 0;
};

}  // namespace kagg
