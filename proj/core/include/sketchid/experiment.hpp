#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sketchid/lti.hpp"
#include "sketchid/sketch.hpp"
#include "sketchid/solver.hpp"

/// Experiment harness: named presets that sweep sketch variants and worker
/// counts over simulated identification problems, plus sample-count sweeps
/// and embedding diagnostics. Everything here is deterministic given the
/// preset; any single cell re-run in isolation reproduces its row bitwise.
namespace sketchid {

struct NoiseConfig {
    double sigma_u = 1.0;
    double sigma_w = 0.1;
    double sigma_v = 0.1;
};

/// One experiment definition: a simulated system, a list of sketch variants
/// (their seeds are ignored; cells derive their own), worker counts, and
/// repetitions. Each repetition draws a fresh system and trajectory.
struct ExperimentPreset {
    std::string name;
    std::size_t state_dim = 0;
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    std::size_t horizon = 1;
    std::size_t samples = 1;
    NoiseConfig noise;
    std::vector<SketchSpec> variants;
    std::vector<std::size_t> worker_counts;
    std::size_t repetitions = 1;
    std::uint64_t master_seed = 0;
    std::size_t max_iters = 50;
    double stop_tol = 1e-3;
    double spectral_target = 0.95;

    /// Throws InvalidSpecError unless dimensions are positive, variants and
    /// worker counts are nonempty, and samples >= input_dim * horizon (the
    /// overdetermined regime).
    void validate() const;
};

/// Named presets: fig1-desk, fig2-desk, fig3-desk (laptop scale) and
/// fig1, fig2, fig3 (full scale). Throws InvalidSpecError on unknown names.
ExperimentPreset builtin_preset(const std::string& name);
std::vector<std::string> builtin_preset_names();

/// Everything one repetition shares across its cells: the drawn system, the
/// simulated regression data, the exact least-squares baseline, and the true
/// Markov parameters transposed into solver layout (d x p).
struct PresetInstance {
    LtiSystem system;
    RegressionData data;
    DenseMatrix baseline;
    DenseMatrix truth;
};

/// Deterministically rebuilds repetition `rep` of a preset. System and
/// trajectory seeds depend only on (master_seed, rep), so cells of the same
/// repetition see bitwise-identical data.
PresetInstance instantiate(const ExperimentPreset& preset, std::size_t rep);

/// One aggregate row: the outcome of a single (variant, workers, repetition)
/// solve. `contraction` is absent when the trace has too few decaying
/// records to estimate it.
struct CellResult {
    std::string preset;
    SketchFamily family = SketchFamily::gaussian;
    std::size_t sketch_rows = 0;
    std::size_t workers = 0;
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    double rel_err_ls = 0.0;
    double rel_err_g = 0.0;
    std::size_t iterations = 0;
    double wall_seconds = 0.0;
    std::optional<double> contraction;
    IterationTrace trace;
};

/// Runs one cell from scratch (rebuilds the instance). The cell's solver
/// seed depends only on (master_seed, rep, variant_index, workers), never on
/// the position of `workers` in the preset's list.
CellResult run_cell(const ExperimentPreset& preset, std::size_t variant_index,
                    std::size_t workers, std::size_t rep);

/// Cell outcome as a CSV row (no trailing newline), %.17g throughout. The
/// wall_seconds column is the only one that varies between identical runs.
std::string aggregate_row(const CellResult& cell);

/// "preset,family,s,r,rep,seed,rel_err_ls,rel_err_G,iterations,wall_seconds,contraction"
extern const char* const kAggregateHeader;

/// Per-cell trace file name: <preset>_<family>_s<S>_r<R>_rep<K>_trace.csv
std::string trace_file_name(const CellResult& cell);

struct PresetResult {
    std::vector<CellResult> cells;
    std::filesystem::path aggregate_file;
    std::vector<std::filesystem::path> trace_files;
};

/// Runs every (variant x workers x repetition) cell, writing one trace CSV
/// per cell plus <name>_aggregate.csv under out_dir. Row count equals
/// |variants| * |worker_counts| * repetitions, ordered rep-major, then
/// variant, then workers.
PresetResult run_preset(const ExperimentPreset& preset,
                        const std::filesystem::path& out_dir);

/// Ordinary least squares slope of log(error) against log(samples).
/// Identical error values fit an exactly flat line (slope 0.0). Requires at
/// least two points and positive finite errors.
double fit_loglog_slope(const std::vector<std::size_t>& sample_counts,
                        const std::vector<double>& errors);

struct SweepPoint {
    std::size_t samples = 0;
    double rel_err_g = 0.0;
};

/// One seed's sweep: a fixed system, fresh data per sample count. `slope`
/// is absent when every error sits at the solver's stop-tolerance floor
/// (noiseless data identifies the system exactly, so there is no decay to
/// fit).
struct SweepSeedResult {
    std::uint64_t seed = 0;
    std::vector<SweepPoint> points;
    std::optional<double> slope;
};

struct SweepResult {
    std::vector<SweepSeedResult> per_seed;
    std::optional<double> median_slope;
    bool slope_skipped = false;
};

/// For each of `seeds` repetitions: draw one system, then for every sample
/// count simulate fresh data, run the first (variant, worker-count) cell of
/// `base` to convergence, and record the final error against the true Markov
/// parameters. Fits one log-log slope per seed and reports the median.
SweepResult sweep_samples(const ExperimentPreset& base,
                          const std::vector<std::size_t>& sample_counts,
                          std::size_t seeds);

/// Embedding health check for a concrete regression matrix: realizes
/// `repetitions` independent sketches of `spec`'s family and size, measures
/// the distortion of each on U's column space, and reports the fraction with
/// rho_hat <= 0.5 alongside the input conditioning bounds.
struct DiagnosisReport {
    std::vector<double> rho_hats;
    double pass_fraction = 0.0;
    ConditioningReport conditioning;
};

DiagnosisReport diagnose(const DenseMatrix& u, const SketchSpec& spec,
                         std::size_t repetitions, double sigma_u);

}  // namespace sketchid
