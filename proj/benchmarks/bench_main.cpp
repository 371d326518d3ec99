#include "greybox/acquisition.hpp"
#include "greybox/chemproc.hpp"
#include "greybox/harness.hpp"
#include "greybox/pbr.hpp"

#include "test_support.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace greybox;

void BM_GpPosterior(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  d.inputs = Matrix(n, 5);
  d.outputs = Vector(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 5; ++j) d.inputs(i, j) = u(rng);
    d.outputs[i] = std::sin(d.inputs.row(i).sum());
  }
  KernelConfig cfg;
  cfg.length_scales = Vector::Constant(5, 0.5);
  cfg.noise = 1e-6;
  const GpModel model(d, cfg, Scaling::identity(5));
  const Vector q = Vector::Constant(5, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(model.posterior(q));
}
BENCHMARK(BM_GpPosterior)->Arg(20)->Arg(100)->Arg(400);

const CompositeProblem& trained_chemproc() {
  static const CompositeProblem p = [] {
    CompositeProblem c = chemproc::make_problem();
    train_on_random_design(c, 40, 7);
    return c;
  }();
  return p;
}

void BM_BoisMoments(benchmark::State& state) {
  const CompositeProblem& p = trained_chemproc();
  const Vector x = p.design_box.from_unit(Vector::Constant(p.dx(), 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(bois_moments(p, x));
}
BENCHMARK(BM_BoisMoments);

void BM_McMoments(benchmark::State& state) {
  const CompositeProblem& p = trained_chemproc();
  const Vector x = p.design_box.from_unit(Vector::Constant(p.dx(), 0.5));
  const auto s = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mc_moments(p, x, s, 3));
}
BENCHMARK(BM_McMoments)->Arg(10)->Arg(100)->Arg(1000);

void BM_ChemprocSimulate(benchmark::State& state) {
  const Vector x = chemproc::design_box().from_unit(Vector::Constant(5, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(chemproc::simulate(x));
}
BENCHMARK(BM_ChemprocSimulate);

void BM_PbrSimulate(benchmark::State& state) {
  const Vector x = (Vector(3) << 15.4, 30.0, 0.0551).finished();
  for (auto _ : state) benchmark::DoNotOptimize(pbr::simulate(x));
}
BENCHMARK(BM_PbrSimulate);

}  // namespace

BENCHMARK_MAIN();
