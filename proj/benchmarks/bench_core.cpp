#include <benchmark/benchmark.h>

#include "shapelab/fields.hpp"
#include "shapelab/functionals.hpp"
#include "shapelab/riesz.hpp"

using namespace shapelab;

namespace {

GridDomain disk(int cells) {
  return make_ball(GridSpec::centered(2, cells, 2.5), BallSpec{{0, 0, 0}, 1.0});
}

void BM_TorsionSolve(benchmark::State& state) {
  GridDomain dom = disk(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_torsion(dom).energy);
}
BENCHMARK(BM_TorsionSolve)->Arg(64)->Arg(128)->Arg(256);

void BM_EigenSolve(benchmark::State& state) {
  GridDomain dom = disk(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_first_eigen(dom).lambda1);
}
BENCHMARK(BM_EigenSolve)->Arg(64)->Arg(128)->Arg(256);

void BM_RieszFFT(benchmark::State& state) {
  GridDomain dom = disk(static_cast<int>(state.range(0)));
  auto table = RieszKernelTable::build(2, 1.5, dom.spec);
  for (auto _ : state)
    benchmark::DoNotOptimize(riesz_potential(dom, table).energy);
}
BENCHMARK(BM_RieszFFT)->Arg(64)->Arg(128)->Arg(256)->Arg(512);

void BM_Asymmetry(benchmark::State& state) {
  GridDomain dom = disk(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(fraenkel_asymmetry(dom).value);
}
BENCHMARK(BM_Asymmetry)->Arg(64)->Arg(128);

void BM_BoundaryFlux(benchmark::State& state) {
  GridDomain dom = disk(static_cast<int>(state.range(0)));
  auto sol = solve_torsion(dom);
  for (auto _ : state) benchmark::DoNotOptimize(boundary_flux(sol, dom));
}
BENCHMARK(BM_BoundaryFlux)->Arg(128)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
