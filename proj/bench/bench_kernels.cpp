// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to compare scaling.

#include <random>

#include <benchmark/benchmark.h>

#include "pbda/kernels.hpp"
#include "pbda/nn.hpp"
#include "pbda/random.hpp"

namespace {

using namespace pbda;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

const MlpArchitecture kArch{{2, 64, 64, 1}, Activation::relu};

template <auto Fn>
void BM_predict(benchmark::State& state) {
    const Matrix X = random_matrix(state.range(0), 2, 1);
    const WeightVector w = init_weights(kArch, 2);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(kArch, w, X));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_kernel_sum(benchmark::State& state) {
    const Matrix X = random_matrix(state.range(0), 2, 3);
    const Matrix Y = random_matrix(state.range(0), 2, 4);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(X, Y, 1.0));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <auto Fn>
void BM_linear_mmd(benchmark::State& state) {
    const std::size_t n = state.range(0);
    const Matrix X = random_matrix(n, 2, 5);
    const Matrix Y = random_matrix(n, 2, 6);
    std::vector<kernels::PairedIndex> blocks;
    for (std::size_t i = 0; i + 1 < n; i += 2) blocks.push_back({i, i, i + 1, i + 1});
    for (auto _ : state) benchmark::DoNotOptimize(Fn(X, Y, blocks, 1.0));
    state.SetItemsProcessed(state.iterations() * blocks.size());
}

}  // namespace

BENCHMARK(BM_predict<kernels::serial::predict_labels>)->Name("predict/serial")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_predict<kernels::parallel::predict_labels>)->Name("predict/parallel")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_kernel_sum<kernels::serial::kernel_sum>)->Name("kernel_sum/serial")->Arg(1 << 9)->Arg(1 << 11);
BENCHMARK(BM_kernel_sum<kernels::parallel::kernel_sum>)->Name("kernel_sum/parallel")->Arg(1 << 9)->Arg(1 << 11);
BENCHMARK(BM_linear_mmd<kernels::serial::linear_mmd_terms>)->Name("linear_mmd/serial")->Arg(1 << 16);
BENCHMARK(BM_linear_mmd<kernels::parallel::linear_mmd_terms>)->Name("linear_mmd/parallel")->Arg(1 << 16);

BENCHMARK_MAIN();
