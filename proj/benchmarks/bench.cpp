#include <benchmark/benchmark.h>

#include "caltype/matrix.hpp"
#include "caltype/model.hpp"
#include "caltype/recurrent.hpp"
#include "caltype/rng.hpp"
#include "caltype/sim.hpp"

using namespace caltype;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.normal();
  return m;
}

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Matrix a = random_matrix(n, n, rng);
  Matrix b = random_matrix(n, n, rng);
  Matrix c(n, n);
  for (auto _ : state) {
    gemm(c, a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(128)->Arg(256);

void BM_Gemv(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Matrix a = random_matrix(n, n, rng);
  Matrix x = random_matrix(n, 1, rng);
  Matrix y(n, 1);
  for (auto _ : state) {
    gemm(y, a, x);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n);
}
BENCHMARK(BM_Gemv)->Arg(100)->Arg(1000);

void BM_ConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  Conv1D conv(32, 10, 1, 1);
  conv.init(rng);
  Matrix x = random_matrix(1, n, rng);
  for (auto _ : state) {
    Matrix y = conv.forward(x);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_ConvForward)->Arg(1000)->Arg(4000);

void BM_RnnForward(benchmark::State& state) {
  // Fixed input length, varying fold depth: shows the per-epoch cost trend
  // across timestep counts.
  const auto steps = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 4000;
  Rng rng(4);
  RnnLayer cell(100, n / steps);
  cell.init(rng);
  Matrix seq = random_matrix(steps, n / steps, rng);
  for (auto _ : state) {
    Matrix h = cell.forward(seq);
    benchmark::DoNotOptimize(h.data());
  }
}
BENCHMARK(BM_RnnForward)->Arg(2)->Arg(5)->Arg(10);

void BM_LstmForward(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 4000;
  Rng rng(5);
  LstmLayer cell(100, n / steps);
  cell.init(rng);
  Matrix seq = random_matrix(steps, n / steps, rng);
  for (auto _ : state) {
    Matrix h = cell.forward(seq);
    benchmark::DoNotOptimize(h.data());
  }
}
BENCHMARK(BM_LstmForward)->Arg(2)->Arg(5)->Arg(10);

void BM_NetworkTrainStep(benchmark::State& state) {
  Rng rng(6);
  ModelSpec spec = ModelSpec::preset("rnn-t5");
  Network net(spec, 4000, 7);
  std::vector<double> x(4000);
  for (double& v : x) v = rng.normal();
  for (auto _ : state) {
    auto probs = net.forward(x);
    net.backward(probs, 1);
    net.flush_grads();
    net.zero_grads();
    benchmark::DoNotOptimize(probs.data());
  }
}
BENCHMARK(BM_NetworkTrainStep);

void BM_TraceGeneration(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Profile profile = default_profile();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto spikes = generate_spikes(profile[0].spike_rate, n, ++seed);
    auto trace = spikes_to_fluorescence(spikes, profile[0], seed);
    benchmark::DoNotOptimize(trace.data());
  }
}
BENCHMARK(BM_TraceGeneration)->Arg(1000)->Arg(4000);

} // namespace

BENCHMARK_MAIN();
