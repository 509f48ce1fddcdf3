#pragma once

#include <span>
#include <vector>

namespace kagg {

/// Mean squared difference. Throws InvalidArgument on empty or unequal inputs.
double metric_mse(std::span<const double> pred, std::span<const double> truth);
double metric_rmse(std::span<const double> pred, std::span<const double> truth);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> values);
double median(std::vector<double> values);

}  // namespace kagg
