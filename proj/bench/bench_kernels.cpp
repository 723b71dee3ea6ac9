// Serial reference paths against the fast / OpenMP kernels.
#include "tdpauc/bandwidth.hpp"
#include "tdpauc/inference.hpp"
#include "tdpauc/pauc.hpp"
#include "tdpauc/reference.hpp"
#include "tdpauc/simulate.hpp"
#include "tdpauc/survival.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace tdpauc;

Cohort make(std::size_t n) {
  SimDesign d;
  d.n = n;
  d.censor_rate = 0.3;
  d.censor_scale = 2.08;
  d.seed = 11;
  return generate_cohort(d, 0);
}

Exec exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Exec::serial : Exec::parallel;
}

void label(benchmark::State& state) {
  state.SetLabel(std::string(to_string(exec_of(state))) + " threads=" + std::to_string(max_threads()));
}

void BM_conditional_km(benchmark::State& state) {
  const Cohort c = make(static_cast<std::size_t>(state.range(0)));
  const TimeGrid grid = default_grid(c, 0.2, 0.8);
  for (auto _ : state) {
    auto s = conditional_km(c, 0.1, grid, {.zero_xi = false, .exec = exec_of(state)});
    benchmark::DoNotOptimize(s.st().data());
  }
  label(state);
}
BENCHMARK(BM_conditional_km)->ArgsProduct({{250, 500, 1000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_influence(benchmark::State& state) {
  const Cohort c = make(static_cast<std::size_t>(state.range(0)));
  const TimeGrid grid = default_grid(c, 0.2, 0.8);
  const auto s = conditional_km(c, 0.1, grid);
  const JointSurvivor j(s, c);
  for (auto _ : state) {
    auto m = influence_matrix(s, j, c, 0.2, exec_of(state));
    benchmark::DoNotOptimize(m.values.data());
  }
  label(state);
}
BENCHMARK(BM_influence)->ArgsProduct({{250, 500, 1000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_influence_reference(benchmark::State& state) {
  const Cohort c = make(static_cast<std::size_t>(state.range(0)));
  const TimeGrid grid({10.0});
  const auto s = conditional_km(c, 0.1, grid);
  const JointSurvivor j(s, c);
  std::vector<double> col(c.size()), xi(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    col[i] = s.st()(static_cast<Eigen::Index>(i), 0);
    xi[i] = s.xi()(static_cast<Eigen::Index>(i), 0);
  }
  const Threshold q = fpr_quantile(j, 0, 0.2);
  for (auto _ : state) {
    auto v = reference::influence_column(col, xi, c.markers(), q, 0.2);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetLabel("reference, one grid time");
}
BENCHMARK(BM_influence_reference)->Args({250})->Args({500})->Unit(benchmark::kMillisecond);

void BM_pair_sum(benchmark::State& state) {
  const Cohort c = make(static_cast<std::size_t>(state.range(0)));
  const TimeGrid grid({10.0});
  const auto s = conditional_km(c, 0.1, grid);
  const JointSurvivor j(s, c);
  std::vector<double> col(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) col[i] = s.st()(static_cast<Eigen::Index>(i), 0);
  const Threshold q = fpr_quantile(j, 0, 0.2);
  const PairSum mode = state.range(1) == 0 ? PairSum::pairs : PairSum::sorted;
  for (auto _ : state) benchmark::DoNotOptimize(pauc_at(col, j.marker_order(), q, j.survival(0), mode));
  state.SetLabel(mode == PairSum::pairs ? "pairs" : "sorted");
}
BENCHMARK(BM_pair_sum)->ArgsProduct({{250, 1000}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_loo_residuals(benchmark::State& state) {
  const Cohort c = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto r = loo_residuals(c, 0.1, exec_of(state));
    benchmark::DoNotOptimize(r.data());
  }
  label(state);
}
BENCHMARK(BM_loo_residuals)->ArgsProduct({{250, 500, 1000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_loo_reference(benchmark::State& state) {
  const Cohort c = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto r = reference::loo_residuals(reference::view(c), 0.1);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetLabel("reference");
}
BENCHMARK(BM_loo_reference)->Args({50})->Args({100})->Unit(benchmark::kMillisecond);

void BM_multiplier(benchmark::State& state) {
  const Cohort c = make(500);
  const TimeGrid grid = default_grid(c, 0.2, 0.8);
  const auto s = conditional_km(c, 0.1, grid);
  const JointSurvivor j(s, c);
  const auto infl = influence_matrix(s, j, c, 0.2);
  std::vector<double> center;
  for (const auto& e : infl.estimates) center.push_back(e.theta);
  MultiplierOptions mo;
  mo.resamples = static_cast<std::size_t>(state.range(0));
  mo.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(simultaneous_band(center, infl, 0.95, mo).critical_value);
  label(state);
}
BENCHMARK(BM_multiplier)->ArgsProduct({{1000}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
