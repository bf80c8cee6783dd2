#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "impdiff/registry/methods.hpp"
#include "impdiff/registry/registry.hpp"

namespace {

using namespace impdiff;
using registry::Method;

void run(benchmark::State& state, const registry::ProblemSpec& spec, Method method) {
  const std::vector<double> alpha(spec.dims.output, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(registry::gradient(spec, method, spec.default_x, alpha));
  }
}

// Adjoint cost is flat in the input dimension; forward sensitivity is linear.
void BM_OdeLinearNd(benchmark::State& state, Method method) {
  registry::Overrides o;
  o.state_dim = 10;
  o.input_dim = static_cast<std::size_t>(state.range(0));
  const auto spec = registry::lookup("ode-linear-nd", o);
  run(state, spec, method);
  state.SetComplexityN(state.range(0));
}
BENCHMARK_CAPTURE(BM_OdeLinearNd, adjoint, Method::adjoint)
    ->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK_CAPTURE(BM_OdeLinearNd, forward_sens, Method::forward_sens)
    ->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond)->Complexity();

void BM_DifferenceSteps(benchmark::State& state, Method method) {
  registry::Overrides o;
  o.steps = static_cast<std::size_t>(state.range(0));
  run(state, registry::lookup("diffeq-logistic", o), method);
  state.SetComplexityN(state.range(0));
}
BENCHMARK_CAPTURE(BM_DifferenceSteps, adjoint, Method::adjoint)
    ->RangeMultiplier(10)->Range(10, 10000)->Complexity(benchmark::oN);
BENCHMARK_CAPTURE(BM_DifferenceSteps, ift_reverse, Method::ift_reverse)
    ->RangeMultiplier(10)->Range(10, 1000)->Complexity();

void BM_Problem(benchmark::State& state, const std::string& name, Method method) {
  run(state, registry::lookup(name), method);
}
BENCHMARK_CAPTURE(BM_Problem, sqrt_ift_forward, "algebraic-sqrt", Method::ift_forward);
BENCHMARK_CAPTURE(BM_Problem, sqrt_ift_reverse, "algebraic-sqrt", Method::ift_reverse);
BENCHMARK_CAPTURE(BM_Problem, sqrt_adjoint, "algebraic-sqrt", Method::adjoint);
BENCHMARK_CAPTURE(BM_Problem, sqrt_trace, "algebraic-sqrt", Method::trace);
BENCHMARK_CAPTURE(BM_Problem, opt_exp_ift_reverse, "opt-exp", Method::ift_reverse);
BENCHMARK_CAPTURE(BM_Problem, dae_adjoint, "dae-conserved-sum", Method::adjoint)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Problem, dae_reduction, "dae-conserved-sum", Method::ift_reverse)
    ->Unit(benchmark::kMillisecond);

}  // namespace
