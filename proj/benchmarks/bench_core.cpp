#include <benchmark/benchmark.h>

#include "pmca/dim2.hpp"
#include "pmca/dynamics.hpp"
#include "pmca/floquet.hpp"
#include "pmca/optimize.hpp"
#include "pmca/spectral.hpp"

using namespace pmca;

namespace {

ModelParams three() {
  ModelParams p;
  p.n = 3;
  p.tau = {1.0, 10.0, 0.0};
  p.beta = {0.0, 0.5, 1.0};
  p.kappa = {{{1, 2}, 2.0}, {{1, 3}, 1.0}, {{2, 3}, 1.0}};
  return p;
}

const dim2::Dim2Config kTurnpike{-0.2, 1.0, 0.1, 0.05, 1.0, 4.0};

void BM_PerronTriple(benchmark::State& state) {
  const auto m = build_matrices(three());
  for (auto _ : state) benchmark::DoNotOptimize(perron_triple(3.0, 0.5, m));
}
BENCHMARK(BM_PerronTriple);

void BM_HullMaximum(benchmark::State& state) {
  const auto m = build_matrices(three());
  const auto r = RateFunction::rational(2.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(maximize_perron_hull(r, 1.0, 8.0, m));
}
BENCHMARK(BM_HullMaximum)->Unit(benchmark::kMillisecond);

void BM_Monodromy(benchmark::State& state) {
  const auto m = build_matrices(three());
  const auto r = RateFunction::rational(2.0, 1.0);
  const auto control = PeriodicControl::cosine(2.15, 0.5, 10.0);
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(monodromy(control, m, r, steps));
}
BENCHMARK(BM_Monodromy)->Arg(4096)->Arg(16384)->Unit(benchmark::kMicrosecond);

void BM_SynthesizeAndSimulate(benchmark::State& state) {
  const Vector x0 = (Vector(2) << 0.0, 1.0).finished();
  const auto m = kTurnpike.matrices();
  for (auto _ : state) {
    const auto tc = dim2::synthesize_turnpike(x0, 24.0, kTurnpike);
    benchmark::DoNotOptimize(simulate(x0, tc.control, m, kTurnpike.theta));
  }
}
BENCHMARK(BM_SynthesizeAndSimulate)->Unit(benchmark::kMillisecond);

void BM_ObjectiveGradient(benchmark::State& state) {
  DirectProblem pb;
  pb.model = build_matrices(three());
  pb.rate = RateFunction::rational(2.0, 1.0);
  pb.u_min = 1.0;
  pb.u_max = 8.0;
  pb.T = 48.0;
  pb.cell = 48.0 / static_cast<double>(state.range(0));
  pb.x0 = Vector::Constant(3, 1.0 / 3.0);
  const std::vector<double> u(static_cast<std::size_t>(pb.cells()), 3.3);
  for (auto _ : state) benchmark::DoNotOptimize(objective_gradient(pb, u));
}
BENCHMARK(BM_ObjectiveGradient)->Arg(60)->Arg(240)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
