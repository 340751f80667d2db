#include <benchmark/benchmark.h>

#include "pacf/adapt.hpp"
#include "pacf/evaluation.hpp"
#include "pacf/losses.hpp"
#include "pacf/metrics.hpp"
#include "pacf/synthbench.hpp"

using namespace pacf;

namespace {

FeatureVector gaussian(Rng& rng, std::size_t d) {
  FeatureVector v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

PrototypeSet random_set(Rng& rng, Domain domain, std::size_t classes, std::size_t dim) {
  PrototypeSet set(domain, classes, dim);
  for (ClassId k = 0; k < classes; ++k) set.assign(k, gaussian(rng, dim));
  return set;
}

void BM_cosine_similarity(benchmark::State& state) {
  Rng rng(1);
  const auto d = static_cast<std::size_t>(state.range(0));
  const FeatureVector a = gaussian(rng, d), b = gaussian(rng, d);
  for (auto _ : state) benchmark::DoNotOptimize(cosine_similarity(a, b));
}
BENCHMARK(BM_cosine_similarity)->Arg(16)->Arg(256);

void BM_prototype_cross_entropy(benchmark::State& state) {
  Rng rng(2);
  const auto C = static_cast<std::size_t>(state.range(0));
  const auto src = random_set(rng, Domain::Source, C, 16), tgt = random_set(rng, Domain::Target, C, 16);
  const FeatureVector x = gaussian(rng, 16);
  for (auto _ : state) benchmark::DoNotOptimize(prototype_cross_entropy(x, 0, src, tgt, 0.05));
}
BENCHMARK(BM_prototype_cross_entropy)->Arg(2)->Arg(8)->Arg(32);

void BM_mutual_regularization(benchmark::State& state) {
  Rng rng(3);
  const auto C = static_cast<std::size_t>(state.range(0));
  const auto a = temperature_softmax(gaussian(rng, C), 1.0), b = temperature_softmax(gaussian(rng, C), 1.0),
             c = temperature_softmax(gaussian(rng, C), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(mutual_regularization(a, b, c));
}
BENCHMARK(BM_mutual_regularization)->Arg(8)->Arg(64);

void BM_update_all(benchmark::State& state) {
  Rng rng(4);
  const PrototypeSet set = random_set(rng, Domain::Target, 8, 16);
  std::vector<FeatureVector> features;
  std::vector<ClassId> labels;
  for (int i = 0; i < 64; ++i) {
    features.push_back(gaussian(rng, 16));
    labels.push_back(rng.index(8));
  }
  for (auto _ : state) benchmark::DoNotOptimize(update_all(set, features, labels));
}
BENCHMARK(BM_update_all);

void BM_kendall_tau(benchmark::State& state) {
  Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(rng.index(100));
    y[i] = rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_kendall_tau)->RangeMultiplier(4)->Range(256, 65536)->Complexity(benchmark::oNLogN);

void BM_spearman_rho(benchmark::State& state) {
  Rng rng(6);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(spearman_rho(x, y));
}
BENCHMARK(BM_spearman_rho)->Arg(1600)->Arg(65536);

void BM_proxy_a_distance(benchmark::State& state) {
  Rng rng(7);
  std::vector<FeatureVector> a, b;
  for (int i = 0; i < 1600; ++i) {
    a.push_back(gaussian(rng, 16));
    b.push_back(gaussian(rng, 16));
  }
  for (auto _ : state) benchmark::DoNotOptimize(proxy_a_distance(a, b));
}
BENCHMARK(BM_proxy_a_distance)->Unit(benchmark::kMillisecond);

void BM_pca_project_2d(benchmark::State& state) {
  Rng rng(8);
  std::vector<FeatureVector> rows;
  for (int i = 0; i < 1600; ++i) rows.push_back(gaussian(rng, 16));
  for (auto _ : state) benchmark::DoNotOptimize(pca_project_2d(rows));
}
BENCHMARK(BM_pca_project_2d)->Unit(benchmark::kMillisecond);

struct Prepared {
  DatasetPair data;
  TrainerConfig config;
  AdaptationState state;
};

Prepared prepare() {
  DatasetPair data = generate(DomainShiftSpec{});
  TrainerConfig config;
  const ModelParams init = ModelParams::random(32, config.feature_dim, 8, 1);
  const ModelParams warmed = warm_up(init, data.source(), config);
  AdaptationState state = begin_adaptation(warmed, data.training_view(), config);
  return Prepared{std::move(data), config, std::move(state)};
}

void BM_train_step(benchmark::State& state) {
  Prepared p = prepare();
  TrainerConfig one = p.config;
  one.steps = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_run(p.state, p.data.training_view(), one));
}
BENCHMARK(BM_train_step)->Unit(benchmark::kMicrosecond);

void BM_evaluate(benchmark::State& state) {
  const Prepared p = prepare();
  const auto threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(EvaluationInputs{p.state.student, p.state.teacher, p.state.target_prototypes,
                                                       p.data.source(), p.data.target_features(),
                                                       p.data.hidden_target_labels(), 0.8},
                                      threads));
  }
}
BENCHMARK(BM_evaluate)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
