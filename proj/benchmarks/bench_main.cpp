#include <benchmark/benchmark.h>

#include <memory>

#include "odtr/bart.hpp"
#include "odtr/cutpoints.hpp"
#include "odtr/dtr.hpp"
#include "odtr/obart.hpp"
#include "odtr/ordered_probit.hpp"
#include "odtr/simlab.hpp"

using namespace odtr;

namespace {

TwoStageDataset make_data(int scenario, int n, std::uint64_t seed) {
  SeededRng rng(seed, 0);
  return generate(ScenarioSpec::get(scenario), n, rng);
}

void BM_generate(benchmark::State& state) {
  const ScenarioSpec spec = ScenarioSpec::get(static_cast<int>(state.range(0)));
  const int n = static_cast<int>(state.range(1));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    SeededRng rng(seed++, 0);
    benchmark::DoNotOptimize(generate(spec, n, rng));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_generate)->Args({1, 10000})->Args({10, 10000})->Unit(benchmark::kMillisecond);

void BM_qlearning_fit(benchmark::State& state) {
  const TwoStageDataset data = make_data(6, static_cast<int>(state.range(0)), 7);
  QLearningConfig cfg;
  cfg.r_ql = 25;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    SeededRng rng(seed++, 0);
    benchmark::DoNotOptimize(qlearning_fit(data, {}, cfg, rng));
  }
}
BENCHMARK(BM_qlearning_fit)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_bp_fit(benchmark::State& state) {
  const TwoStageDataset data = make_data(6, static_cast<int>(state.range(0)), 7);
  BigSamplerConfig cfg;
  cfg.stage_model = StageModelKind::BP;
  cfg.s2_draws = 500;
  cfg.s2_burnin = 250;
  cfg.r_bml = 50;
  cfg.s1_draws = 50;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    SeededRng rng(seed++, 0);
    benchmark::DoNotOptimize(big_sampler_fit(data, {}, cfg, rng));
  }
}
BENCHMARK(BM_bp_fit)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_obart_fit(benchmark::State& state) {
  const TwoStageDataset data = make_data(10, static_cast<int>(state.range(0)), 7);
  BigSamplerConfig cfg;
  cfg.stage_model = StageModelKind::Obart;
  cfg.s2_draws = 200;
  cfg.s2_burnin = 100;
  cfg.r_bml = 20;
  cfg.s1_draws = 30;
  cfg.obart.bart.M = 50;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    SeededRng rng(seed++, 0);
    benchmark::DoNotOptimize(big_sampler_fit(data, {}, cfg, rng));
  }
}
BENCHMARK(BM_obart_fit)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_forest_sweep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SeededRng gen(3, 0);
  Eigen::MatrixXd X(n, 5);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 5; ++j) X(i, j) = sample_normal(gen);
    y(i) = std::sin(X(i, 0)) + 0.3 * sample_normal(gen);
  }
  auto data = std::make_shared<const BartData>(make_bart_data(X));
  BartHyper hyper;
  hyper.M = 50;
  Forest forest(data, hyper);
  SeededRng rng(4, 0);
  for (auto _ : state) forest.sweep(rng, y, 1.0);
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_forest_sweep)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_cutpoint_mh(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SeededRng gen(5, 0);
  Eigen::VectorXd fits(n);
  Eigen::VectorXi labels(n);
  for (int i = 0; i < n; ++i) {
    fits(i) = sample_normal(gen);
    const double z = fits(i) + sample_normal(gen);
    labels(i) = z <= 0.0 ? 1 : (z <= 0.8 ? 2 : 3);
  }
  CutPoints cut({0.0, 0.5}, true);
  SeededRng rng(6, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mh_cutpoint_block(rng, cut, fits, labels, 0.3));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_cutpoint_mh)->Arg(1000);

void BM_true_psi1_oracle(benchmark::State& state) {
  // cached after the first call; measures the warm lookup + interpolation path
  const ScenarioSpec spec = ScenarioSpec::get(static_cast<int>(state.range(0)));
  (void)true_psi1(spec, 0.0);
  double x = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(true_psi1(spec, x));
    x = x < 1.0 ? x + 1e-4 : -1.0;
  }
}
BENCHMARK(BM_true_psi1_oracle)->Arg(3)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
