// Serial references against the OpenMP paths. Run with OMP_NUM_THREADS set to compare.

#include "kagg/aggregation.hpp"
#include "kagg/bandwidth_opt.hpp"
#include "kagg/datagen.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace kagg;

namespace {

struct Fixture {
  std::vector<BaseLearner> learners;
  PredictionMatrix pm;
  Matrix test;

  explicit Fixture(std::size_t l) {
    const auto g = gen_model({1, Regime::Uncorrelated}, 400 + l + 200, 1);
    std::vector<std::size_t> idx(g.data.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const std::span<const std::size_t> all(idx);
    const Dataset dk = g.data.subset(all.subspan(0, 400));
    const Dataset dl = g.data.subset(all.subspan(400, l));
    test = g.data.subset(all.subspan(400 + l, 200)).features;
    for (const LearnerSpec& s : std::vector<LearnerSpec>{RidgeParams{}, KnnParams{}, TreeParams{},
                                                         ForestParams{100, std::nullopt, 2, 0, std::nullopt}}) {
      learners.push_back(BaseLearner::fit(s, dk, 3));
    }
    pm = PredictionMatrix{predict_all(learners, dl.features), dl.responses};
  }
};

const Fixture& fixture(std::size_t l) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(l);
  if (it == cache.end()) it = cache.emplace(l, Fixture(l)).first;
  return it->second;
}

const KernelVector kGauss{KernelSpec{}, Bandwidth{50.0, Parametrization::Multiplicative}};

void BM_CvValueSerial(benchmark::State& state) {
  const CvObjective cv(fixture(static_cast<std::size_t>(state.range(0))).pm, kGauss, 5, 0);
  for (auto _ : state) benchmark::DoNotOptimize(cv.value_reference(50.0));
}

void BM_CvValueParallel(benchmark::State& state) {
  const CvObjective cv(fixture(static_cast<std::size_t>(state.range(0))).pm, kGauss, 5, 0);
  for (auto _ : state) benchmark::DoNotOptimize(cv.value(50.0));
}

void BM_CvGradientSerial(benchmark::State& state) {
  const CvObjective cv(fixture(static_cast<std::size_t>(state.range(0))).pm, kGauss, 5, 0);
  for (auto _ : state) benchmark::DoNotOptimize(cv.gradient_reference(50.0));
}

void BM_CvGradientParallel(benchmark::State& state) {
  const CvObjective cv(fixture(static_cast<std::size_t>(state.range(0))).pm, kGauss, 5, 0);
  for (auto _ : state) benchmark::DoNotOptimize(cv.value_and_gradient(50.0));
}

void BM_PredictAllSerial(benchmark::State& state) {
  const Fixture& f = fixture(200);
  for (auto _ : state) benchmark::DoNotOptimize(predict_all_serial(f.learners, f.test));
}

void BM_PredictAllParallel(benchmark::State& state) {
  const Fixture& f = fixture(200);
  for (auto _ : state) benchmark::DoNotOptimize(predict_all(f.learners, f.test));
}

void BM_AggregateBatchSerial(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  const AggregatorModel model(f.learners, f.pm, kGauss);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_batch_serial(f.test));
}

void BM_AggregateBatchParallel(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  const AggregatorModel model(f.learners, f.pm, kGauss);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_batch(f.test));
}

}  // namespace

BENCHMARK(BM_CvValueSerial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CvValueParallel)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CvGradientSerial)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CvGradientParallel)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictAllSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictAllParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AggregateBatchSerial)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AggregateBatchParallel)->Arg(400)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
