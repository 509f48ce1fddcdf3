#include "kagg/learners/tree.hpp"

#include "kagg/errors.hpp"
#include "kagg/rng.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace kagg {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct PendingNode {
  std::uint32_t index;
  std::vector<std::size_t> rows;
  std::size_t depth;
};

Split best_split(const Dataset& data, const std::vector<std::size_t>& rows,
                 std::span<const std::size_t> features, std::size_t min_leaf, double parent_term,
                 double min_gain) {
  Split best;
  const std::size_t n = rows.size();
  std::vector<std::pair<double, double>> column(n);
  for (std::size_t f : features) {
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = static_cast<Eigen::Index>(rows[r]);
      column[r] = {data.features(row, static_cast<Eigen::Index>(f)), data.responses[row]};
    }
    std::sort(column.begin(), column.end());
    double total = 0.0;
    for (const auto& c : column) total += c.second;
    double left = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      left += column[i - 1].second;
      if (i < min_leaf || n - i < min_leaf) continue;
      if (!(column[i - 1].first < column[i].first)) continue;
      const double right = total - left;
      const double gain = left * left / static_cast<double>(i) +
                          right * right / static_cast<double>(n - i) - parent_term;
      if (gain > best.gain && gain > min_gain) {
        double thr = 0.5 * (column[i - 1].first + column[i].first);
        if (!(thr < column[i].first)) thr = column[i - 1].first;
        best = {static_cast<int>(f), thr, gain};
      }
    }
  }
  return best;
}

}  // namespace

RegressionTree RegressionTree::grow(const Dataset& data, std::span<const std::size_t> rows,
                                    const TreeParams& params, std::optional<std::size_t> mtry,
                                    Rng* rng) {
  data.validate();
  if (rows.empty()) throw InvalidArgument("tree: no rows to grow on");
  const std::size_t min_leaf = std::max<std::size_t>(1, params.min_leaf);
  const std::size_t d = data.dims();
  const std::size_t n_try = mtry ? std::clamp<std::size_t>(*mtry, 1, d) : d;
  if (n_try < d && rng == nullptr) throw InvalidArgument("tree: feature subsampling needs an rng");

  RegressionTree tree;
  tree.dims_ = d;
  std::vector<std::size_t> all_features(d);
  std::iota(all_features.begin(), all_features.end(), 0);

  tree.nodes_.push_back({});
  std::vector<PendingNode> stack;
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end()), 0});

  while (!stack.empty()) {
    PendingNode current = std::move(stack.back());
    stack.pop_back();

    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t r : current.rows) {
      const double y = data.responses[static_cast<Eigen::Index>(r)];
      sum += y;
      sum_sq += y * y;
    }
    const auto count = static_cast<double>(current.rows.size());
    Node& node = tree.nodes_[current.index];
    node.value = sum / count;
    node.count = static_cast<std::uint32_t>(current.rows.size());

    const double parent_term = sum * sum / count;
    const double total_ss = sum_sq - parent_term;
    const bool depth_capped = params.max_depth != 0 && current.depth >= params.max_depth;
    if (current.rows.size() < 2 * min_leaf || depth_capped || !(total_ss > 1e-12 * (1.0 + sum_sq))) {
      continue;
    }

    std::span<const std::size_t> candidates(all_features);
    if (n_try < d) {
      for (std::size_t i = 0; i < n_try; ++i) {
        const auto j = i + static_cast<std::size_t>(rng->below(d - i));
        std::swap(all_features[i], all_features[j]);
      }
      candidates = std::span<const std::size_t>(all_features.data(), n_try);
    }
    const Split split = best_split(data, current.rows, candidates, min_leaf, parent_term,
                                   1e-12 * total_ss);
    if (split.feature < 0) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : current.rows) {
      const double x = data.features(static_cast<Eigen::Index>(r), split.feature);
      (x <= split.threshold ? left_rows : right_rows).push_back(r);
    }
    const auto left_index = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.nodes_.push_back({});
    tree.nodes_.push_back({});
    Node& parent = tree.nodes_[current.index];
    parent.feature = split.feature;
    parent.threshold = split.threshold;
    parent.left = left_index;
    parent.right = left_index + 1;
    stack.push_back({left_index + 1, std::move(right_rows), current.depth + 1});
    stack.push_back({left_index, std::move(left_rows), current.depth + 1});
  }
  return tree;
}

double RegressionTree::predict(std::span<const double> x) const {
  if (x.size() != dims_) throw InvalidArgument("tree: dimension mismatch");
  std::uint32_t at = 0;
  while (nodes_[at].feature >= 0) {
    const Node& node = nodes_[at];
    at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes_[at].value;
}

RandomForest::RandomForest(const Dataset& train, const ForestParams& params, std::uint64_t seed) {
  train.validate();
  if (params.n_trees == 0) throw InvalidArgument("forest: n_trees must be at least 1");
  dims_ = train.dims();
  const std::size_t mtry = params.mtry.value_or((dims_ + 2) / 3);
  const TreeParams tree_params{params.min_leaf, params.max_depth};
  const std::uint64_t base = params.seed.value_or(seed);
  const std::size_t n = train.rows();
  trees_.reserve(params.n_trees);
  std::vector<std::size_t> sample(n);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(base, t));
    for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
    trees_.push_back(RegressionTree::grow(train, sample, tree_params, mtry, &rng));
  }
}

double RandomForest::predict(std::span<const double> x) const {
  if (x.size() != dims_) throw InvalidArgument("forest: dimension mismatch");
  double acc = 0.0;
  for (const auto& tree : trees_) acc += tree.predict(x);
  return acc / static_cast<double>(trees_.size());
}

}  // namespace kagg
