// Microbenchmarks for the hot paths: the in-place Walsh-Hadamard transform,
// sketch realize+apply per family (the per-worker, per-iteration cost in the
// solver), the Gram product, one worker's sketched Newton step, and a full
// solver iteration at several worker counts.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "sketchid/dense_matrix.hpp"
#include "sketchid/linalg.hpp"
#include "sketchid/rng.hpp"
#include "sketchid/sketch.hpp"
#include "sketchid/solver.hpp"

using namespace sketchid;

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols,
                          std::uint64_t seed) {
    RandomStream stream(seed);
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = stream.next_gaussian();
    }
    return m;
}

void bm_fwht(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<double> buf(n);
    RandomStream stream(42);
    for (double& v : buf) v = stream.next_gaussian();
    for (auto _ : state) {
        fwht_inplace(buf);
        benchmark::DoNotOptimize(buf.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n));
}

void bm_sketch(benchmark::State& state, SketchFamily family) {
    const DenseMatrix u = random_matrix(4096, 32, 7);
    SketchSpec spec;
    spec.family = family;
    spec.s = 256;
    spec.l = 8;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        spec.seed = ++seed;  // fresh draw per pass, as the solver does
        const SketchOperator op = realize(spec, u.rows());
        const DenseMatrix su = apply(op, u);
        benchmark::DoNotOptimize(su.data());
    }
}

void bm_gram(benchmark::State& state) {
    const DenseMatrix su = random_matrix(256, 32, 9);
    for (auto _ : state) {
        const DenseMatrix h = gram(su);
        benchmark::DoNotOptimize(h.data());
    }
}

void bm_worker_step(benchmark::State& state) {
    const DenseMatrix u = random_matrix(4096, 32, 11);
    const DenseMatrix y = random_matrix(4096, 5, 12);
    const DenseMatrix x = DenseMatrix(32, 5);
    const DenseMatrix gradient = matmul(transpose(u), matmul(u, x)) -
                                 matmul(transpose(u), y);
    SketchSpec spec;
    spec.family = SketchFamily::gaussian;
    spec.s = 256;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        spec.seed = ++seed;
        const SketchOperator op = realize(spec, u.rows());
        const DenseMatrix next = worker_step(u, gradient, x, op);
        benchmark::DoNotOptimize(next.data());
    }
}

void bm_dihs_iteration(benchmark::State& state) {
    const DenseMatrix u = random_matrix(4096, 32, 13);
    const DenseMatrix y = random_matrix(4096, 5, 14);
    SolverConfig config;
    config.sketch.family = SketchFamily::gaussian;
    config.sketch.s = 256;
    config.workers = static_cast<std::size_t>(state.range(0));
    config.max_iters = 1;
    config.stop_tol = 1e-300;  // never triggers, so exactly one iteration
    std::uint64_t seed = 0;
    for (auto _ : state) {
        config.master_seed = ++seed;
        const SolverResult result = dihs_solve(u, y, config);
        benchmark::DoNotOptimize(result.x.data());
    }
}

}  // namespace

BENCHMARK(bm_fwht)->RangeMultiplier(4)->Range(256, 16384);
BENCHMARK_CAPTURE(bm_sketch, gaussian, SketchFamily::gaussian);
BENCHMARK_CAPTURE(bm_sketch, rademacher, SketchFamily::rademacher);
BENCHMARK_CAPTURE(bm_sketch, uniform, SketchFamily::uniform);
BENCHMARK_CAPTURE(bm_sketch, ros, SketchFamily::ros);
BENCHMARK_CAPTURE(bm_sketch, sjlt, SketchFamily::sjlt);
BENCHMARK_CAPTURE(bm_sketch, uniform_then_sjlt,
                  SketchFamily::uniform_then_sjlt);
BENCHMARK(bm_gram);
BENCHMARK(bm_worker_step);
BENCHMARK(bm_dihs_iteration)->Arg(1)->Arg(4)->Arg(16);

BENCHMARK_MAIN();
