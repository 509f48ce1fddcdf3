#include "kagg/dataset.hpp"

#include "kagg/errors.hpp"

#include <string>

namespace kagg {

void Dataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1) {
    throw InvalidArgument("dataset needs at least one row and one feature");
  }
  if (features.rows() != responses.size()) {
    throw InvalidArgument("dataset has " + std::to_string(features.rows()) +
                          " feature rows but " + std::to_string(responses.size()) +
                          " responses");
  }
  if (!features.allFinite() || !responses.allFinite()) {
    throw InvalidArgument("dataset contains non-finite entries");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.responses.resize(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(indices[r]);
    if (src >= features.rows()) throw InvalidArgument("subset index out of range");
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(src);
    out.responses[static_cast<Eigen::Index>(r)] = responses[src];
  }
  return out;
}

}  // namespace kagg
