#include "kagg/aggregation.hpp"

#include "kagg/errors.hpp"
#include "kagg/geometry.hpp"

#include <cmath>

namespace kagg {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_query(const PredictionMatrix& pm, std::span<const double> query) {
  if (query.size() != pm.models()) {
    throw InvalidArgument("query has " + std::to_string(query.size()) + " predictions, expected " +
                          std::to_string(pm.models()));
  }
}

}  // namespace

void PredictionMatrix::validate() const {
  if (values.rows() < 1 || values.cols() < 1) {
    throw InvalidArgument("prediction matrix needs at least one row and one machine");
  }
  if (values.rows() != responses.size()) {
    throw InvalidArgument("prediction matrix rows and responses are misaligned");
  }
  if (!values.allFinite() || !responses.allFinite()) {
    throw InvalidArgument("prediction matrix contains non-finite entries");
  }
}

PredictionMatrix PredictionMatrix::subset(std::span<const std::size_t> indices) const {
  PredictionMatrix out;
  out.values.resize(static_cast<Eigen::Index>(indices.size()), values.cols());
  out.responses.resize(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(indices[r]);
    out.values.row(static_cast<Eigen::Index>(r)) = values.row(src);
    out.responses[static_cast<Eigen::Index>(r)] = responses[src];
  }
  return out;
}

std::string scheme_name(const WeightScheme& scheme) {
  return std::visit(Overloaded{
                        [](const CobraFull&) { return std::string("cobra"); },
                        [](const CobraRelaxed&) { return std::string("cobra-relaxed"); },
                        [](const KernelVector&) { return std::string("kernel"); },
                        [](const KernelPerCoord&) { return std::string("kernel-percoord"); },
                    },
                    scheme);
}

double scheme_bandwidth(const WeightScheme& scheme) {
  return std::visit(Overloaded{
                        [](const CobraFull& s) { return s.h; },
                        [](const CobraRelaxed& s) { return s.h; },
                        [](const KernelVector& s) { return s.bw.h; },
                        [](const KernelPerCoord& s) { return s.bw.h; },
                    },
                    scheme);
}

WeightScheme with_bandwidth(WeightScheme scheme, double h) {
  std::visit(Overloaded{
                 [&](CobraFull& s) { s.h = h; },
                 [&](CobraRelaxed& s) { s.h = h; },
                 [&](KernelVector& s) { s.bw.h = h; },
                 [&](KernelPerCoord& s) { s.bw.h = h; },
             },
             scheme);
  return scheme;
}

std::size_t required_agreements(double alpha, std::size_t models) {
  return static_cast<std::size_t>(std::llround(alpha * static_cast<double>(models)));
}

void validate_scheme(const WeightScheme& scheme, std::size_t models) {
  const double h = scheme_bandwidth(scheme);
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("bandwidth h must be positive");
  std::visit(Overloaded{
                 [](const CobraFull&) {},
                 [&](const CobraRelaxed& s) {
                   const double scaled = s.alpha * static_cast<double>(models);
                   const auto k = required_agreements(s.alpha, models);
                   if (k < 1 || k > models || std::abs(scaled - static_cast<double>(k)) > 1e-9) {
                     throw InvalidArgument("alpha must be one of 1/M, 2/M, ..., 1");
                   }
                 },
                 [](const KernelVector& s) {
                   s.kernel.validate();
                   validate_bandwidth(s.kernel, s.bw);
                 },
                 [](const KernelPerCoord& s) {
                   s.kernel.validate();
                   validate_bandwidth(s.kernel, s.bw);
                 },
             },
             scheme);
}

Vector weights(const WeightScheme& scheme, const PredictionMatrix& pm, std::span<const double> query) {
  check_query(pm, query);
  const MassEvaluator mass(scheme);
  Vector w(pm.values.rows());
  std::vector<double> scratch;
  for (Eigen::Index i = 0; i < pm.values.rows(); ++i) {
    w[i] = mass(make_pair_view(row_span(pm.values, i), query, scratch));
  }
  normalize_masses(std::span<double>(w.data(), static_cast<std::size_t>(w.size())), mass.log_domain());
  return w;
}

AggregatePrediction combine(const WeightScheme& scheme, const PredictionMatrix& pm,
                            std::span<const double> query, ZeroMassPolicy policy) {
  const Vector w = weights(scheme, pm, query);
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) total += w[i];
  if (total == 0.0) {
    return {policy == ZeroMassPolicy::ResponseMean ? pm.responses.mean() : 0.0, true};
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) acc += w[i] * pm.responses[i];
  return {acc, false};
}

AggregatorModel::AggregatorModel(std::vector<BaseLearner> learners, PredictionMatrix pm,
                                 WeightScheme scheme, ZeroMassPolicy policy)
    : learners_(std::move(learners)), pm_(std::move(pm)), scheme_(std::move(scheme)), policy_(policy) {
  if (learners_.empty()) throw InvalidArgument("aggregator needs at least one learner");
  pm_.validate();
  if (pm_.models() != learners_.size()) {
    throw InvalidArgument("prediction matrix width differs from the number of learners");
  }
  validate_scheme(scheme_, pm_.models());
}

AggregatorModel AggregatorModel::build(std::vector<BaseLearner> learners,
                                       const Dataset& aggregation_rows, WeightScheme scheme,
                                       ZeroMassPolicy policy) {
  aggregation_rows.validate();
  PredictionMatrix pm{predict_all(learners, aggregation_rows.features), aggregation_rows.responses};
  return AggregatorModel(std::move(learners), std::move(pm), std::move(scheme), policy);
}

AggregatePrediction AggregatorModel::predict_from_predictions(std::span<const double> preds) const {
  return combine(scheme_, pm_, preds, policy_);
}

AggregatePrediction AggregatorModel::predict(std::span<const double> x) const {
  if (x.size() != dims()) throw InvalidArgument("aggregator: dimension mismatch");
  std::vector<double> preds(learners_.size());
  for (std::size_t m = 0; m < learners_.size(); ++m) preds[m] = learners_[m].predict(x);
  return predict_from_predictions(preds);
}

std::vector<AggregatePrediction> AggregatorModel::predict_batch(const Matrix& points) const {
  if (static_cast<std::size_t>(points.cols()) != dims()) {
    throw InvalidArgument("aggregator: dimension mismatch");
  }
  std::vector<AggregatePrediction> out(static_cast<std::size_t>(points.rows()));
  const auto n = points.rows();
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = predict(row_span(points, i));
  }
  return out;
}

std::vector<AggregatePrediction> AggregatorModel::predict_batch_serial(const Matrix& points) const {
  if (static_cast<std::size_t>(points.cols()) != dims()) {
    throw InvalidArgument("aggregator: dimension mismatch");
  }
  std::vector<AggregatePrediction> out;
  out.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) out.push_back(predict(row_span(points, i)));
  return out;
}

AggregatePrediction aggregate_predict(const AggregatorModel& model, std::span<const double> x) {
  return model.predict(x);
}

std::vector<AggregatePrediction> aggregate_predict_batch(const AggregatorModel& model,
                                                         const Matrix& points) {
  return model.predict_batch(points);
}

}  // namespace kagg
