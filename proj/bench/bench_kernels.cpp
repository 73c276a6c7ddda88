#include <benchmark/benchmark.h>

#include "multicred/kernels.hpp"
#include "multicred/rng.hpp"

using multicred::Matrix;
namespace kernels = multicred::kernels;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    multicred::Rng rng(seed);
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = rng.normal();
    return m;
}

template <void (*Gemm)(const Matrix&, const Matrix&, std::span<const double>, Matrix&)>
void BM_gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(n, 768, 1);
    const Matrix b = random_matrix(768, 128, 2);
    Matrix out(n, 128);
    for (auto _ : state) {
        Gemm(a, b, {}, out);
        benchmark::DoNotOptimize(out.data().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 768 * 128));
}

template <void (*Dist)(const Matrix&, Matrix&)>
void BM_pairwise(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix x = random_matrix(n, 51, 3);
    Matrix out(n, n);
    for (auto _ : state) {
        Dist(x, out);
        benchmark::DoNotOptimize(out.data().data());
    }
}

}  // namespace

BENCHMARK(BM_gemm<kernels::serial::gemm>)->Name("gemm/serial")->Arg(64)->Arg(512);
BENCHMARK(BM_gemm<kernels::parallel::gemm>)->Name("gemm/parallel")->Arg(64)->Arg(512);
BENCHMARK(BM_pairwise<kernels::serial::pairwise_sq_dist>)->Name("pairwise/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_pairwise<kernels::parallel::pairwise_sq_dist>)->Name("pairwise/parallel")->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
