// Serial reference vs OpenMP: the plane-wise matrix product and the
// Monte-Carlo trial loop.

#include "qglms/harness.hpp"
#include "qglms/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace qglms;

static void BM_MatmulSerial(benchmark::State& state)
{
    const auto n = state.range(0);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Random(n, n);
    const PlaneMatrix in = PlaneMatrix::Random(n, 4);
    PlaneMatrix out;
    for (auto _ : state) {
        kernels::matmul_planes_serial(A, in, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * n * n * 4);
}

static void BM_MatmulOmp(benchmark::State& state)
{
    const auto n = state.range(0);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Random(n, n);
    const PlaneMatrix in = PlaneMatrix::Random(n, 4);
    PlaneMatrix out;
    for (auto _ : state) {
        kernels::matmul_planes_omp(A, in, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * n * n * 4);
}

BENCHMARK(BM_MatmulSerial)->Arg(50)->Arg(256)->Arg(1024);
BENCHMARK(BM_MatmulOmp)->Arg(50)->Arg(256)->Arg(1024);

static ExperimentConfig bench_config()
{
    ExperimentConfig c;
    c.trials = 32;
    c.iters = 300;
    return c;
}

// workers == 1 selects the serial trial loop; 0 keeps the OpenMP default.
static void BM_Trials(benchmark::State& state)
{
    const auto c = bench_config();
    const RunOptions opts{static_cast<int>(state.range(0)), false, false};
    for (auto _ : state) {
        auto r = run_experiment(c, opts);
        benchmark::DoNotOptimize(r.algorithms.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.trials));
}

BENCHMARK(BM_Trials)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
