#include <benchmark/benchmark.h>

#include <vector>

#include "impdiff/ad/sweeps.hpp"

namespace {

using namespace impdiff;

// Chain of n sin/mul updates over a 4-vector; tape length grows linearly in n.
ad::VectorProgram chain(int n) {
  return [n](ad::VarSpan x) {
    ad::VarVector s(x.begin(), x.end());
    for (int k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = s[i] + 0.01 * ad::sin(s[(i + 1) % s.size()] * s[i]);
      }
    }
    return s;
  };
}

const std::vector<double> kX{0.1, 0.2, 0.3, 0.4};
const std::vector<double> kOnes(4, 1.0);

void BM_Record(benchmark::State& state) {
  const auto program = chain(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ad::record(program, kX));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Record)->RangeMultiplier(10)->Range(10, 10000)->Complexity(benchmark::oN);

void BM_ForwardSweep(benchmark::State& state) {
  const auto tape = ad::record(chain(static_cast<int>(state.range(0))), kX);
  for (auto _ : state) benchmark::DoNotOptimize(ad::forward_sweep(tape, kOnes));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForwardSweep)->RangeMultiplier(10)->Range(10, 10000)->Complexity(benchmark::oN);

void BM_ReverseSweep(benchmark::State& state) {
  const auto tape = ad::record(chain(static_cast<int>(state.range(0))), kX);
  for (auto _ : state) benchmark::DoNotOptimize(ad::reverse_sweep(tape, kOnes));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ReverseSweep)->RangeMultiplier(10)->Range(10, 10000)->Complexity(benchmark::oN);

void BM_HessianVector(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto vec = chain(n);
  const ad::ScalarProgram program = [vec](ad::VarSpan x) {
    const auto s = vec(x);
    return s[0] * s[1] + s[2] * s[3];
  };
  for (auto _ : state) benchmark::DoNotOptimize(ad::hessian_vector(program, kX, kOnes));
  state.SetComplexityN(n);
}
BENCHMARK(BM_HessianVector)->RangeMultiplier(10)->Range(10, 1000)->Complexity(benchmark::oN);

}  // namespace
