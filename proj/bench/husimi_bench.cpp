// Serial vs OpenMP Husimi kernels on the LMG j = 200 system.

#include <benchmark/benchmark.h>

#include "spinsc/husimi.hpp"
#include "spinsc/quantization.hpp"

using namespace spinsc;

namespace {

struct Setup {
  SpinOperatorSet ops = build_operators(ModelSpec::lmg(Spin::from_twice(400), 1.0, 1000.0));
  ClassicalSystem sys{ops};
  ExactSpectrum exact = eigendecompose(ops);
  QuantizedLevel level;
  LevelFunctionals functionals;

  Setup() {
    // A mid-well level from one branch avoids quantizing the whole spectrum.
    const BranchLevels b = quantize(sys, 0);
    level = b.levels[b.levels.size() / 2];
    functionals = level_functionals(sys, level);
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void exact_kernel(benchmark::State& state, Execution exec) {
  const Setup& s = setup();
  const PhaseGrid g(static_cast<int>(state.range(0)), s.ops.spin, s.ops.hbar);
  for (auto _ : state) benchmark::DoNotOptimize(exact_husimi(s.exact.states.col(270), s.ops.spin, g, exec).raw.data());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.active_count()));
}

void semiclassical_kernel(benchmark::State& state, Execution exec) {
  const Setup& s = setup();
  const PhaseGrid g(static_cast<int>(state.range(0)), s.ops.spin, s.ops.hbar);
  for (auto _ : state) benchmark::DoNotOptimize(semiclassical_husimi(s.sys, s.level, s.functionals, g, exec).raw.data());
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.active_count()));
}

}  // namespace

BENCHMARK_CAPTURE(exact_kernel, serial, Execution::Serial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(exact_kernel, parallel, Execution::Parallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(semiclassical_kernel, serial, Execution::Serial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(semiclassical_kernel, parallel, Execution::Parallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
