// Serial vs OpenMP kernels on a batch the size of a full-set prediction pass.
#include <numeric>

#include <benchmark/benchmark.h>

#include "edde/kernels.hpp"
#include "edde/nn.hpp"
#include "edde/random.hpp"

using namespace edde;

namespace {

nn::Network network() { return nn::init_network({{32, 128, 128, 10}, nn::Activation::relu}, 1); }

Matrix inputs(std::size_t n) {
    Rng rng(2);
    Matrix x(n, 32);
    for (double& v : x.flat()) v = rng.normal();
    return x;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    std::iota(r.begin(), r.end(), std::size_t{0});
    return r;
}

template <bool Parallel>
void BM_forward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto net = network();
    const auto x = inputs(n);
    const auto rows = all_rows(n);
    Matrix out(n, 10);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::forward_rows_parallel(net, x, rows, out);
        else
            kernels::forward_rows_serial(net, x, rows, out);
        benchmark::DoNotOptimize(out.flat().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <bool Parallel>
void BM_gradient(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto net = network();
    const auto x = inputs(n);
    const auto rows = all_rows(n);
    std::vector<nn::Trace> traces;
    kernels::trace_rows_serial(net, x, rows, traces);
    Matrix g(n, 10);
    for (std::size_t i = 0; i < n; ++i) g(i, i % 10) = -1.0;
    kernels::GradientWorkspace ws;
    nn::Parameters out = nn::zeros_like(net);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::gradient_parallel(net, traces, g, ws, out);
        else
            kernels::gradient_serial(net, traces, g, ws, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <bool Parallel>
void BM_combine(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    std::vector<Matrix> preds(5, Matrix(n, 10));
    for (auto& p : preds)
        for (double& v : p.flat()) v = rng.uniform();
    const std::vector<double> alphas{3.0, 0.5, 0.4, 0.3, 0.2};
    for (auto _ : state) {
        Matrix m = Parallel ? kernels::combine_parallel(preds, alphas) : kernels::combine_serial(preds, alphas);
        benchmark::DoNotOptimize(m.flat().data());
    }
}

}  // namespace

BENCHMARK(BM_forward<false>)->Arg(256)->Arg(4096);
BENCHMARK(BM_forward<true>)->Arg(256)->Arg(4096);
BENCHMARK(BM_gradient<false>)->Arg(64)->Arg(512);
BENCHMARK(BM_gradient<true>)->Arg(64)->Arg(512);
BENCHMARK(BM_combine<false>)->Arg(10000);
BENCHMARK(BM_combine<true>)->Arg(10000);

BENCHMARK_MAIN();
