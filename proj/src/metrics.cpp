#include "kagg/metrics.hpp"

#include "kagg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kagg {

double metric_mse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw InvalidArgument("mse: length mismatch");
  if (pred.empty()) throw InvalidArgument("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - truth[i];
    acc += r * r;
  }
  return acc / static_cast<double>(pred.size());
}

double metric_rmse(std::span<const double> pred, std::span<const double> truth) {
  return std::sqrt(metric_mse(pred, truth));
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace kagg
