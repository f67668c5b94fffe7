#include <benchmark/benchmark.h>

#include <sulp/gig.hpp>
#include <sulp/linalg.hpp>
#include <sulp/priors.hpp>
#include <sulp/sampler.hpp>

using namespace sulp;

namespace {

SULPSystem synthetic(Index T, Index H, Index k, Rng& rng) {
  SULPSystem s;
  s.shocks = rng.normal_matrix(T, 1);
  s.controls = rng.normal_matrix(T, k);
  s.response = s.shocks * rng.normal_matrix(1, H) + s.controls * (0.1 * rng.normal_matrix(k, H)) +
               rng.normal_matrix(T, H);
  s.shock_info.push_back({"x", false, {}});
  for (Index j = 0; j < k; ++j) s.control_layout.push_back({"z" + std::to_string(j), ControlRole::CrossLag, 1});
  s.missing_by_row.assign(static_cast<std::size_t>(T), {});
  s.instruments.resize(T, 0);
  return s;
}

void BM_Sweep(benchmark::State& state) {
  const Index H = state.range(0);
  Rng rng(1);
  const Index k = 29;
  ControlsPrior cp;
  cp.mean = MatrixXd::Zero(k, H);
  cp.variance = VectorXd::Constant(k, 10.0);
  SamplerConfig cfg;
  Sampler sampler(synthetic(250, H, k, rng), default_hyperparameters(H), cp, cfg);
  for (auto _ : state) {
    sampler.sweep(rng, true);
    benchmark::DoNotOptimize(sampler.state().log_lik);
  }
}
BENCHMARK(BM_Sweep)->Arg(9)->Arg(17)->Arg(33)->Unit(benchmark::kMicrosecond);

void BM_Gig(benchmark::State& state) {
  Rng rng(2);
  const double chi = state.range(0) == 0 ? 0.01 : 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_gig(0.4, chi, 2.0, rng));
}
BENCHMARK(BM_Gig)->Arg(0)->Arg(1);

void BM_KernelCholesky(benchmark::State& state) {
  const Index H = state.range(0);
  for (auto _ : state) {
    const KernelMatrix k = gp_kernel(H, 0.2, 1.5);
    benchmark::DoNotOptimize(k.k.data());
  }
}
BENCHMARK(BM_KernelCholesky)->Arg(17)->Arg(41);

}  // namespace
BENCHMARK_MAIN();
