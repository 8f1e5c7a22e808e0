// Serial reference kernels against the parallel ones on HKB-sized (1D) and
// Von Mises-sized (2D) problems. Run with OMP_NUM_THREADS to vary the team.
#include "mvsteady/kernels.hpp"
#include "mvsteady/models.hpp"
#include "mvsteady/operators.hpp"

#include <benchmark/benchmark.h>

#include <array>
#include <random>

using namespace mvsteady;

namespace {

struct Tables {
  Matrix psi;
  std::vector<Matrix> fields;
  std::vector<Matrix> dpsi;
  Vector weights;
  Matrix kernel;
};

Tables make_tables(int dimension, int modes, int points) {
  const TorusDomain domain = dimension == 1 ? TorusDomain::line(0.0, 2.0 * M_PI) : TorusDomain::square(-M_PI, M_PI);
  const SpectralBasis basis(domain, modes);
  const QuadratureRule quad = build_quadrature(domain, points);
  Tables t;
  t.psi = basis.values(quad.nodes);
  t.weights = quad.weights;
  const auto n = static_cast<Index>(quad.nodes.size());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  t.kernel = Matrix::NullaryExpr(n, n, [&]() { return normal(rng); });
  for (int j = 0; j < dimension; ++j) {
    t.dpsi.push_back(basis.derivatives(quad.nodes, j));
    t.fields.push_back(kernels::convolve(t.kernel, t.weights, t.psi));
  }
  return t;
}

const Tables& tables(int dimension) {
  static const Tables one = make_tables(1, 32, 104);
  static const Tables two = make_tables(2, 5, 24);
  return dimension == 1 ? one : two;
}

void BM_TrilinearReference(benchmark::State& state) {
  const Tables& t = tables(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::reference::assemble_trilinear(t.psi, t.fields, t.dpsi, t.weights));
  }
}

void BM_TrilinearParallel(benchmark::State& state) {
  const Tables& t = tables(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::assemble_trilinear(t.psi, t.fields, t.dpsi, t.weights));
  }
  state.counters["threads"] = kernels::max_threads();
}

void BM_ConvolveReference(benchmark::State& state) {
  const Tables& t = tables(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::convolve(t.kernel, t.weights, t.psi));
}

void BM_ConvolveParallel(benchmark::State& state) {
  const Tables& t = tables(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::convolve(t.kernel, t.weights, t.psi));
}

void BM_BilinearApplyReference(benchmark::State& state) {
  const Tables& t = tables(static_cast<int>(state.range(0)));
  const BilinearMap b = kernels::assemble_trilinear(t.psi, t.fields, t.dpsi, t.weights);
  const Vector x = Vector::Ones(b.size());
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::bilinear_apply(b, x, x));
}

void BM_BilinearApply(benchmark::State& state) {
  const Tables& t = tables(static_cast<int>(state.range(0)));
  const BilinearMap b = kernels::assemble_trilinear(t.psi, t.fields, t.dpsi, t.weights);
  const Vector x = Vector::Ones(b.size());
  for (auto _ : state) benchmark::DoNotOptimize(b.apply(x, x));
}

}  // namespace

BENCHMARK(BM_TrilinearReference)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrilinearParallel)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveReference)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveParallel)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BilinearApplyReference)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BilinearApply)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
