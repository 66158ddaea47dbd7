#include <benchmark/benchmark.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "curvseg/kernels.hpp"
#include "curvseg/pnp_solver.hpp"
#include "curvseg/synthgen.hpp"

namespace {

using namespace curvseg;

Shape grid(const benchmark::State& state) {
  const Index n = state.range(0);
  return state.range(1) == 3 ? Shape{n, n, n} : Shape{n, n};
}

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

void cells_processed(benchmark::State& state, const Shape& s) {
  state.SetItemsProcessed(state.iterations() * std::int64_t(s.size()));
}

template <auto Kernel>
void BM_Gradient(benchmark::State& state) {
  const Shape s = grid(state);
  const auto u = noise(s.size(), 1);
  std::vector<double> g(s.size() * std::size_t(s.ndim()));
  for (auto _ : state) {
    Kernel(s, u, g);
    benchmark::DoNotOptimize(g.data());
  }
  cells_processed(state, s);
}

template <auto Kernel>
void BM_Divergence(benchmark::State& state) {
  const Shape s = grid(state);
  const auto v = noise(s.size() * std::size_t(s.ndim()), 2);
  std::vector<double> out(s.size());
  for (auto _ : state) {
    Kernel(s, v, out);
    benchmark::DoNotOptimize(out.data());
  }
  cells_processed(state, s);
}

template <auto Kernel>
void BM_ProxDualTv(benchmark::State& state) {
  const Shape s = grid(state);
  const auto w = noise(s.size() * std::size_t(s.ndim()), 3);
  std::vector<double> out(w.size());
  for (auto _ : state) {
    Kernel(s.ndim(), w, 0.5, out);
    benchmark::DoNotOptimize(out.data());
  }
  cells_processed(state, s);
}

template <auto Kernel>
void BM_Median(benchmark::State& state) {
  const Shape s = grid(state);
  const auto f = noise(s.size(), 4);
  std::vector<double> out(s.size());
  for (auto _ : state) {
    Kernel(s, f, 2, out);
    benchmark::DoNotOptimize(out.data());
  }
  cells_processed(state, s);
}

template <auto Kernel>
void BM_SquaredEdt(benchmark::State& state) {
  const Shape s = grid(state);
  std::vector<double> seeds(s.size(), std::numeric_limits<double>::infinity());
  std::mt19937_64 rng(5);
  for (double& x : seeds)
    if (rng() % 50 == 0) x = 0.0;
  std::vector<double> work(s.size());
  for (auto _ : state) {
    work = seeds;
    Kernel(s, work);
    benchmark::DoNotOptimize(work.data());
  }
  cells_processed(state, s);
}

void BM_Segment(benchmark::State& state) {
  const std::array<Index, 2> dims{256, 256};
  const BinaryMask tree = random_tree(dims, 8, {1.0, 3.0}, 3);
  const ScalarField f = render_intensity(tree, 1.0, 0.0, 0.1, 4);
  SolverConfig c;
  c.max_iter = 200;
  c.tol = 0.0;
  c.backend = state.range(0) ? Backend::Parallel : Backend::Serial;
  IdentityReconnector id;
  for (auto _ : state) benchmark::DoNotOptimize(segment(f, c, id).state.iter);
  state.SetLabel(to_string(c.backend));
}

void sizes(benchmark::internal::Benchmark* b) { b->Args({512, 2})->Args({96, 3})->UseRealTime(); }

BENCHMARK(BM_Gradient<kernels::serial::gradient>)->Apply(sizes);
BENCHMARK(BM_Gradient<kernels::parallel::gradient>)->Apply(sizes);
BENCHMARK(BM_Divergence<kernels::serial::divergence>)->Apply(sizes);
BENCHMARK(BM_Divergence<kernels::parallel::divergence>)->Apply(sizes);
BENCHMARK(BM_ProxDualTv<kernels::serial::prox_dual_tv>)->Apply(sizes);
BENCHMARK(BM_ProxDualTv<kernels::parallel::prox_dual_tv>)->Apply(sizes);
BENCHMARK(BM_Median<kernels::serial::median_filter>)->Args({256, 2})->Args({48, 3})->UseRealTime();
BENCHMARK(BM_Median<kernels::parallel::median_filter>)->Args({256, 2})->Args({48, 3})->UseRealTime();
BENCHMARK(BM_SquaredEdt<kernels::serial::squared_edt>)->Apply(sizes);
BENCHMARK(BM_SquaredEdt<kernels::parallel::squared_edt>)->Apply(sizes);
BENCHMARK(BM_Segment)->Arg(0)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
