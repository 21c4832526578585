#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "sketchid/dense_matrix.hpp"
#include "sketchid/sketch.hpp"

namespace sketchid {

/// Configuration of the distributed sketched Newton iteration.
struct SolverConfig {
    SketchSpec sketch;        // per-worker seeds are derived, see dihs_solve
    std::size_t workers = 1;  // r
    std::size_t max_iters = 20;
    double stop_tol = 1e-3;   // threshold on ||X_{t+1} - X_t||_F
    std::uint64_t master_seed = 0;
    bool resample_on_singular = true;
    /// When set, every worker draws the same operator each iteration
    /// (the averaging then degenerates to a single worker's step).
    bool share_worker_seeds = false;
    /// Optional per-worker sketch sizes; empty means sketch.s for all, else
    /// must hold exactly `workers` entries.
    std::vector<std::size_t> worker_rows;
    /// OS threads used to run workers; 0 picks hardware concurrency.
    /// Results are identical for every value.
    std::size_t threads = 0;
};

/// One trace record. `iter` counts from 0 (the initial point). Records
/// written while iterating carry the gradient norm at X_t and the step norm
/// ||X_{t+1} - X_t||_F; the closing record carries only the errors of the
/// final iterate. Error fields are present when the corresponding reference
/// was supplied.
struct TraceRecord {
    std::size_t iter = 0;
    double wall_seconds = 0.0;
    std::optional<double> rel_err_ls;   // ||X_t - X_ls||_F / ||X_ls||_F
    std::optional<double> rel_err_g;    // ||X_t - G^T||_F / ||G||_F
    std::optional<double> grad_norm;    // ||U^T (U X_t - Y)||_F
    std::optional<double> step_norm;    // ||X_{t+1} - X_t||_F
};

struct IterationTrace {
    std::vector<TraceRecord> records;
};

/// CSV with header iter,wall_seconds,rel_err_ls,rel_err_G,grad_norm,step_norm;
/// absent optional fields are written as empty cells.
void write_trace_csv(const IterationTrace& trace,
                     const std::filesystem::path& path);

/// Iterate and gradient exposed to an optional per-iteration observer.
struct SolverState {
    const DenseMatrix& x;
    const DenseMatrix& gradient;
    std::size_t iter;
};

struct SolverResult {
    DenseMatrix x;
    IterationTrace trace;
    std::size_t iterations = 0;  // update steps actually taken
    bool converged = false;      // stop_tol reached before max_iters ran out
};

/// Optional references handed to dihs_solve.
struct SolveReferences {
    const DenseMatrix* x0 = nullptr;        // initial iterate, default zero
    const DenseMatrix* baseline = nullptr;  // least-squares solution X_ls
    const DenseMatrix* truth = nullptr;     // transposed true parameters G^T
    std::function<void(const SolverState&)> observer;
};

/// Exact baseline argmin_X ||Y - U X||_F via thin QR.
DenseMatrix exact_ls(const DenseMatrix& u, const DenseMatrix& y);

/// One exact Newton step X_t - (U^T U)^{-1} U^T (U X_t - Y); lands on the
/// least-squares solution from any starting point.
DenseMatrix newton_exact_step(const DenseMatrix& u, const DenseMatrix& y,
                              const DenseMatrix& x_t);

/// One worker's sketched Newton step
///   X_t - (U^T S^T S U)^{-1} g_t,  g_t = U^T (U X_t - Y).
DenseMatrix worker_step(const DenseMatrix& u, const DenseMatrix& gradient,
                        const DenseMatrix& x_t, const SketchOperator& op);

/// Distributed iterative Hessian sketch. Each iteration computes the exact
/// gradient once, hands it to `workers` independent sketched solves with
/// fresh operators (worker i at iteration t draws seed
/// derive_seed(master_seed, i, t), i = 1..r), and averages the proposals
/// pairwise in worker-id order, so results are bitwise reproducible for any
/// thread count. Stops when ||X_{t+1} - X_t||_F < stop_tol or after
/// max_iters iterations. A worker whose sketched Hessian fails to factor is
/// redrawn once with a perturbed seed (when resample_on_singular) before the
/// solve aborts naming the worker and iteration.
SolverResult dihs_solve(const DenseMatrix& u, const DenseMatrix& y,
                        const SolverConfig& config,
                        const SolveReferences& refs = {});

/// Geometric mean of consecutive baseline-error ratios over the leading
/// trace records whose rel_err_ls exceeds 1e-12. Throws
/// InsufficientTraceError when fewer than three such records exist.
double contraction_estimate(const IterationTrace& trace);

}  // namespace sketchid
