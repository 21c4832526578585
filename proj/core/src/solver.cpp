#include "sketchid/solver.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <thread>

#include "sketchid/errors.hpp"
#include "sketchid/linalg.hpp"
#include "sketchid/rng.hpp"

namespace sketchid {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> as_eigen(const DenseMatrix& m) {
    return {m.data(), static_cast<Eigen::Index>(m.rows()),
            static_cast<Eigen::Index>(m.cols())};
}

Eigen::Map<RowMat> as_eigen(DenseMatrix& m) {
    return {m.data(), static_cast<Eigen::Index>(m.rows()),
            static_cast<Eigen::Index>(m.cols())};
}

// U^T (U X - Y)
DenseMatrix residual_gradient(const DenseMatrix& u, const DenseMatrix& y,
                              const DenseMatrix& x) {
    RowMat residual = as_eigen(u) * as_eigen(x) - as_eigen(y);
    DenseMatrix g(u.cols(), y.cols());
    as_eigen(g).noalias() = as_eigen(u).transpose() * residual;
    return g;
}

// Label mixed into a worker's seed when its first draw is singular.
constexpr std::uint64_t kResampleTag = 0x7E5A3317u;

double relative_error(const DenseMatrix& x, const DenseMatrix& reference) {
    return frobenius_distance(x, reference) / frobenius_norm(reference);
}

std::string format_cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// In-place pairwise tree sum over `items` in index order; the combination
/// order is fixed so reductions are reproducible, and power-of-two counts of
/// identical summands add without rounding.
DenseMatrix pairwise_average(std::vector<DenseMatrix>& items) {
    const std::size_t r = items.size();
    for (std::size_t stride = 1; stride < r; stride <<= 1) {
        for (std::size_t i = 0; i + stride < r; i += stride << 1) {
            items[i] += items[i + stride];
        }
    }
    DenseMatrix out = std::move(items[0]);
    out *= 1.0 / static_cast<double>(r);
    return out;
}

}  // namespace

DenseMatrix exact_ls(const DenseMatrix& u, const DenseMatrix& y) {
    return qr_least_squares(u, y);
}

DenseMatrix newton_exact_step(const DenseMatrix& u, const DenseMatrix& y,
                              const DenseMatrix& x_t) {
    const DenseMatrix g = residual_gradient(u, y, x_t);
    return x_t - cholesky_solve(gram(u), g);
}

DenseMatrix worker_step(const DenseMatrix& u, const DenseMatrix& gradient,
                        const DenseMatrix& x_t, const SketchOperator& op) {
    return x_t - cholesky_solve(sketched_hessian(op, u), gradient);
}

void write_trace_csv(const IterationTrace& trace,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("write_trace_csv: cannot open " + path.string());
    out << "iter,wall_seconds,rel_err_ls,rel_err_G,grad_norm,step_norm\n";
    auto cell = [](const std::optional<double>& v) {
        return v ? format_cell(*v) : std::string();
    };
    for (const auto& rec : trace.records) {
        out << rec.iter << ',' << format_cell(rec.wall_seconds) << ','
            << cell(rec.rel_err_ls) << ',' << cell(rec.rel_err_g) << ','
            << cell(rec.grad_norm) << ',' << cell(rec.step_norm) << '\n';
    }
    if (!out) throw IoError("write_trace_csv: short write to " + path.string());
}

SolverResult dihs_solve(const DenseMatrix& u, const DenseMatrix& y,
                        const SolverConfig& config,
                        const SolveReferences& refs) {
    const std::size_t n = u.rows();
    const std::size_t d = u.cols();
    const std::size_t p = y.cols();
    if (y.rows() != n) {
        throw DimensionMismatchError("dihs_solve: U and Y row counts differ");
    }
    if (config.workers < 1) {
        throw InvalidSpecError("dihs_solve: need at least one worker");
    }
    if (config.max_iters < 1) {
        throw InvalidSpecError("dihs_solve: need at least one iteration");
    }
    if (!(config.stop_tol > 0.0)) {
        throw InvalidSpecError("dihs_solve: stop_tol must be positive");
    }
    if (!config.worker_rows.empty() &&
        config.worker_rows.size() != config.workers) {
        throw InvalidSpecError(
            "dihs_solve: worker_rows must be empty or hold one entry per "
            "worker");
    }
    auto check_ref = [&](const DenseMatrix* ref, const char* name) {
        if (ref && (ref->rows() != d || ref->cols() != p)) {
            throw DimensionMismatchError(std::string("dihs_solve: ") + name +
                                         " must be d x p");
        }
    };
    check_ref(refs.x0, "x0");
    check_ref(refs.baseline, "baseline");
    check_ref(refs.truth, "truth");

    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&t_start]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t_start)
            .count();
    };

    DenseMatrix x = refs.x0 ? *refs.x0 : DenseMatrix(d, p);
    SolverResult result;
    auto record_errors = [&](TraceRecord& rec, const DenseMatrix& iterate) {
        if (refs.baseline) rec.rel_err_ls = relative_error(iterate, *refs.baseline);
        if (refs.truth) rec.rel_err_g = relative_error(iterate, *refs.truth);
    };

    const std::size_t r = config.workers;
    std::size_t pool = config.threads != 0
                           ? config.threads
                           : std::max<std::size_t>(
                                 1, std::thread::hardware_concurrency());
    pool = std::min(pool, r);

    std::vector<DenseMatrix> proposals(r);
    std::vector<std::exception_ptr> failures(r);

    for (std::size_t t = 0; t < config.max_iters; ++t) {
        const DenseMatrix gradient = residual_gradient(u, y, x);
        if (refs.observer) refs.observer(SolverState{x, gradient, t});

        auto run_worker = [&](std::size_t i) {
            SketchSpec spec = config.sketch;
            if (!config.worker_rows.empty()) spec.s = config.worker_rows[i];
            const std::uint64_t worker_label =
                config.share_worker_seeds ? 1 : i + 1;
            spec.seed = derive_seed(config.master_seed, worker_label, t);
            try {
                try {
                    proposals[i] =
                        worker_step(u, gradient, x, realize(spec, n));
                } catch (const NotPositiveDefiniteError&) {
                    if (!config.resample_on_singular) throw;
                    spec.seed = derive_seed(spec.seed, kResampleTag, t);
                    proposals[i] =
                        worker_step(u, gradient, x, realize(spec, n));
                }
            } catch (const NotPositiveDefiniteError& e) {
                failures[i] = std::make_exception_ptr(NotPositiveDefiniteError(
                    "dihs_solve: singular sketched Hessian for worker " +
                    std::to_string(i + 1) + " at iteration " +
                    std::to_string(t) + ": " + e.what()));
            } catch (...) {
                failures[i] = std::current_exception();
            }
        };

        if (pool <= 1) {
            for (std::size_t i = 0; i < r; ++i) run_worker(i);
        } else {
            std::vector<std::thread> threads;
            threads.reserve(pool);
            for (std::size_t tid = 0; tid < pool; ++tid) {
                threads.emplace_back([&, tid]() {
                    for (std::size_t i = tid; i < r; i += pool) run_worker(i);
                });
            }
            for (auto& th : threads) th.join();
        }
        for (std::size_t i = 0; i < r; ++i) {
            if (failures[i]) std::rethrow_exception(failures[i]);
        }

        DenseMatrix next = pairwise_average(proposals);
        proposals.assign(r, DenseMatrix());

        TraceRecord rec;
        rec.iter = t;
        rec.grad_norm = frobenius_norm(gradient);
        rec.step_norm = frobenius_distance(next, x);
        record_errors(rec, x);
        rec.wall_seconds = elapsed();
        result.trace.records.push_back(rec);

        const double step = *rec.step_norm;
        x = std::move(next);
        result.iterations = t + 1;
        if (step < config.stop_tol) {
            result.converged = true;
            break;
        }
    }

    TraceRecord final_rec;
    final_rec.iter = result.iterations;
    record_errors(final_rec, x);
    final_rec.wall_seconds = elapsed();
    result.trace.records.push_back(final_rec);
    result.x = std::move(x);
    return result;
}

double contraction_estimate(const IterationTrace& trace) {
    std::vector<double> errors;
    for (const auto& rec : trace.records) {
        if (!rec.rel_err_ls) continue;
        if (!(*rec.rel_err_ls > 1e-12)) break;
        errors.push_back(*rec.rel_err_ls);
    }
    if (errors.size() < 3) {
        throw InsufficientTraceError(
            "contraction_estimate: need at least 3 records with baseline "
            "error above 1e-12, found " + std::to_string(errors.size()));
    }
    // Telescoping geometric mean of consecutive ratios.
    const double span = static_cast<double>(errors.size() - 1);
    return std::pow(errors.back() / errors.front(), 1.0 / span);
}

}  // namespace sketchid
