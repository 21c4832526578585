#include "sketchid/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sketchid/errors.hpp"
#include "sketchid/linalg.hpp"
#include "sketchid/rng.hpp"

namespace sketchid {

const char* const kAggregateHeader =
    "preset,family,s,r,rep,seed,rel_err_ls,rel_err_G,iterations,"
    "wall_seconds,contraction";

namespace {

// Labels separating the seed streams of one repetition.
constexpr std::uint64_t kSystemLabel = 0xA11CE;
constexpr std::uint64_t kTrajectoryLabel = 0xB0B;
constexpr std::uint64_t kSolverLabel = 0xCA4;
constexpr std::uint64_t kDiagnoseLabel = 0xD1A6;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    auto mid = values.begin() + n / 2;
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(values.begin(), mid);
    return 0.5 * (lo + hi);
}

ExperimentPreset make_preset(std::string name, std::size_t n, std::size_t m,
                             std::size_t p, std::size_t horizon,
                             std::size_t samples, std::size_t s,
                             std::size_t s1, std::size_t repetitions,
                             std::uint64_t master_seed) {
    ExperimentPreset preset;
    preset.name = std::move(name);
    preset.state_dim = n;
    preset.input_dim = m;
    preset.output_dim = p;
    preset.horizon = horizon;
    preset.samples = samples;
    preset.repetitions = repetitions;
    preset.master_seed = master_seed;
    auto variant = [&](SketchFamily family) {
        SketchSpec spec;
        spec.family = family;
        spec.s = s;
        spec.l = 8;
        spec.s1 = s1;
        return spec;
    };
    preset.variants = {variant(SketchFamily::rademacher),
                       variant(SketchFamily::uniform),
                       variant(SketchFamily::sjlt),
                       variant(SketchFamily::uniform_then_sjlt)};
    preset.worker_counts = {5, 15, 20};
    return preset;
}

// Solves one cell against an already-built instance. run_preset and run_cell
// both land here, so a cell re-run in isolation is bitwise identical.
CellResult solve_cell(const ExperimentPreset& preset,
                      const PresetInstance& inst, std::size_t variant_index,
                      std::size_t workers, std::size_t rep) {
    if (variant_index >= preset.variants.size()) {
        throw InvalidSpecError("run_cell: variant index out of range");
    }
    SolverConfig config;
    config.sketch = preset.variants[variant_index];
    config.workers = workers;
    config.max_iters = preset.max_iters;
    config.stop_tol = preset.stop_tol;
    config.master_seed =
        derive_seed(derive_seed(preset.master_seed, kSolverLabel, rep),
                    variant_index + 1, workers);

    SolveReferences refs;
    refs.baseline = &inst.baseline;
    refs.truth = &inst.truth;
    SolverResult solved = dihs_solve(inst.data.u, inst.data.y, config, refs);

    const TraceRecord& last = solved.trace.records.back();
    CellResult cell;
    cell.preset = preset.name;
    cell.family = config.sketch.family;
    cell.sketch_rows = config.sketch.s;
    cell.workers = workers;
    cell.rep = rep;
    cell.seed = config.master_seed;
    cell.rel_err_ls = last.rel_err_ls.value();
    cell.rel_err_g = last.rel_err_g.value();
    cell.iterations = solved.iterations;
    cell.wall_seconds = last.wall_seconds;
    try {
        cell.contraction = contraction_estimate(solved.trace);
    } catch (const InsufficientTraceError&) {
        cell.contraction = std::nullopt;
    }
    cell.trace = std::move(solved.trace);
    return cell;
}

}  // namespace

void ExperimentPreset::validate() const {
    if (name.empty()) throw InvalidSpecError("preset: name must be nonempty");
    if (state_dim < 1 || input_dim < 1 || output_dim < 1) {
        throw InvalidSpecError("preset " + name +
                               ": system dimensions must be positive");
    }
    if (horizon < 1) {
        throw InvalidSpecError("preset " + name + ": horizon must be >= 1");
    }
    if (samples < input_dim * horizon) {
        throw InvalidSpecError(
            "preset " + name +
            ": samples must be at least input_dim * horizon (got " +
            std::to_string(samples) + " < " +
            std::to_string(input_dim * horizon) + ")");
    }
    if (variants.empty()) {
        throw InvalidSpecError("preset " + name + ": no sketch variants");
    }
    if (worker_counts.empty()) {
        throw InvalidSpecError("preset " + name + ": no worker counts");
    }
    for (std::size_t r : worker_counts) {
        if (r < 1) {
            throw InvalidSpecError("preset " + name +
                                   ": worker counts must be positive");
        }
    }
    if (repetitions < 1) {
        throw InvalidSpecError("preset " + name + ": repetitions must be >= 1");
    }
    if (max_iters < 1) {
        throw InvalidSpecError("preset " + name + ": max_iters must be >= 1");
    }
    if (!(stop_tol > 0.0)) {
        throw InvalidSpecError("preset " + name + ": stop_tol must be > 0");
    }
    if (!(spectral_target > 0.0) || !(spectral_target < 1.0)) {
        throw InvalidSpecError("preset " + name +
                               ": spectral_target must lie in (0, 1)");
    }
}

ExperimentPreset builtin_preset(const std::string& name) {
    // Desk-scale presets keep the full-scale ratios: s/(m*T) of 4, 3, 2 and
    // s1/s of 2, 1.5, 1.2 respectively.
    if (name == "fig1-desk") {
        return make_preset(name, 8, 4, 5, 6, 3000, 96, 192, 3, 101);
    }
    if (name == "fig2-desk") {
        return make_preset(name, 10, 8, 7, 4, 3200, 96, 144, 3, 102);
    }
    if (name == "fig3-desk") {
        return make_preset(name, 12, 10, 8, 4, 4000, 80, 96, 3, 103);
    }
    if (name == "fig1") {
        return make_preset(name, 80, 60, 70, 30, 29971, 7200, 14400, 10, 1);
    }
    if (name == "fig2") {
        return make_preset(name, 100, 80, 70, 20, 49981, 4800, 7200, 10, 2);
    }
    if (name == "fig3") {
        return make_preset(name, 200, 150, 100, 20, 59981, 6000, 7200, 10, 3);
    }
    throw InvalidSpecError("unknown preset '" + name + "'; known presets: " +
                           [] {
                               std::string all;
                               for (const auto& p : builtin_preset_names()) {
                                   if (!all.empty()) all += ", ";
                                   all += p;
                               }
                               return all;
                           }());
}

std::vector<std::string> builtin_preset_names() {
    return {"fig1-desk", "fig2-desk", "fig3-desk", "fig1", "fig2", "fig3"};
}

PresetInstance instantiate(const ExperimentPreset& preset, std::size_t rep) {
    preset.validate();
    if (rep >= preset.repetitions) {
        throw InvalidSpecError("instantiate: repetition index out of range");
    }
    LtiSystem system = generate_system(
        preset.state_dim, preset.input_dim, preset.output_dim,
        derive_seed(preset.master_seed, kSystemLabel, rep),
        preset.spectral_target);

    SimulationConfig sim;
    sim.horizon = preset.horizon;
    sim.samples = preset.samples;
    sim.sigma_u = preset.noise.sigma_u;
    sim.sigma_w = preset.noise.sigma_w;
    sim.sigma_v = preset.noise.sigma_v;
    sim.seed = derive_seed(preset.master_seed, kTrajectoryLabel, rep);

    PresetInstance inst{system, simulate(system, sim), DenseMatrix(),
                        DenseMatrix()};
    inst.baseline = exact_ls(inst.data.u, inst.data.y);
    inst.truth = transpose(markov_params(system, preset.horizon).g);
    return inst;
}

CellResult run_cell(const ExperimentPreset& preset, std::size_t variant_index,
                    std::size_t workers, std::size_t rep) {
    return solve_cell(preset, instantiate(preset, rep), variant_index, workers,
                      rep);
}

std::string aggregate_row(const CellResult& cell) {
    std::ostringstream row;
    row << cell.preset << ',' << family_name(cell.family) << ','
        << cell.sketch_rows << ',' << cell.workers << ',' << cell.rep << ','
        << cell.seed << ',' << format_double(cell.rel_err_ls) << ','
        << format_double(cell.rel_err_g) << ',' << cell.iterations << ','
        << format_double(cell.wall_seconds) << ','
        << (cell.contraction ? format_double(*cell.contraction)
                             : std::string());
    return row.str();
}

std::string trace_file_name(const CellResult& cell) {
    return cell.preset + "_" + family_name(cell.family) + "_s" +
           std::to_string(cell.sketch_rows) + "_r" +
           std::to_string(cell.workers) + "_rep" + std::to_string(cell.rep) +
           "_trace.csv";
}

PresetResult run_preset(const ExperimentPreset& preset,
                        const std::filesystem::path& out_dir) {
    preset.validate();
    std::filesystem::create_directories(out_dir);

    PresetResult result;
    for (std::size_t rep = 0; rep < preset.repetitions; ++rep) {
        const PresetInstance inst = instantiate(preset, rep);
        for (std::size_t vi = 0; vi < preset.variants.size(); ++vi) {
            for (std::size_t r : preset.worker_counts) {
                CellResult cell = solve_cell(preset, inst, vi, r, rep);
                const auto trace_path = out_dir / trace_file_name(cell);
                write_trace_csv(cell.trace, trace_path);
                result.trace_files.push_back(trace_path);
                result.cells.push_back(std::move(cell));
            }
        }
    }

    result.aggregate_file = out_dir / (preset.name + "_aggregate.csv");
    std::ofstream out(result.aggregate_file, std::ios::trunc);
    if (!out) {
        throw IoError("run_preset: cannot open " +
                      result.aggregate_file.string());
    }
    out << kAggregateHeader << '\n';
    for (const auto& cell : result.cells) out << aggregate_row(cell) << '\n';
    if (!out) {
        throw IoError("run_preset: short write to " +
                      result.aggregate_file.string());
    }
    return result;
}

double fit_loglog_slope(const std::vector<std::size_t>& sample_counts,
                        const std::vector<double>& errors) {
    const std::size_t k = sample_counts.size();
    if (k < 2 || errors.size() != k) {
        throw InvalidSpecError(
            "fit_loglog_slope: need matching lists of at least 2 points");
    }
    for (double e : errors) {
        if (!(e > 0.0) || !std::isfinite(e)) {
            throw InvalidSpecError(
                "fit_loglog_slope: errors must be positive and finite");
        }
    }
    // Identical ordinates mean a flat line no matter how the mean rounds.
    if (std::all_of(errors.begin(), errors.end(),
                    [&](double e) { return e == errors.front(); })) {
        return 0.0;
    }
    double x_mean = 0.0;
    double y_mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        x_mean += std::log(static_cast<double>(sample_counts[i]));
        y_mean += std::log(errors[i]);
    }
    x_mean /= static_cast<double>(k);
    y_mean /= static_cast<double>(k);
    double cov = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double dx =
            std::log(static_cast<double>(sample_counts[i])) - x_mean;
        cov += dx * (std::log(errors[i]) - y_mean);
        var += dx * dx;
    }
    if (var == 0.0) {
        throw InvalidSpecError(
            "fit_loglog_slope: sample counts must not all coincide");
    }
    return cov / var;
}

SweepResult sweep_samples(const ExperimentPreset& base,
                          const std::vector<std::size_t>& sample_counts,
                          std::size_t seeds) {
    base.validate();
    if (seeds < 1) throw InvalidSpecError("sweep_samples: need >= 1 seed");
    if (sample_counts.size() < 2) {
        throw InvalidSpecError("sweep_samples: need >= 2 sample counts");
    }
    const std::size_t min_rows = base.input_dim * base.horizon;
    for (std::size_t n : sample_counts) {
        if (n < min_rows) {
            throw InvalidSpecError(
                "sweep_samples: every sample count must be at least "
                "input_dim * horizon");
        }
    }

    SweepResult result;
    std::vector<double> slopes;
    for (std::size_t k = 0; k < seeds; ++k) {
        const LtiSystem system = generate_system(
            base.state_dim, base.input_dim, base.output_dim,
            derive_seed(base.master_seed, kSystemLabel, k),
            base.spectral_target);
        const DenseMatrix truth =
            transpose(markov_params(system, base.horizon).g);

        // Errors below this are indistinguishable from the stop-tolerance
        // floor: the solver halts once iterates move less than stop_tol, so
        // on noiseless data every error lands near stop_tol / ||G|| and
        // there is no decay left to fit.
        const double error_floor = std::max(
            1e-8, 10.0 * base.stop_tol / frobenius_norm(truth));

        SweepSeedResult seed_result;
        seed_result.seed = derive_seed(base.master_seed, kSystemLabel, k);
        std::vector<double> errors;
        for (std::size_t n : sample_counts) {
            SimulationConfig sim;
            sim.horizon = base.horizon;
            sim.samples = n;
            sim.sigma_u = base.noise.sigma_u;
            sim.sigma_w = base.noise.sigma_w;
            sim.sigma_v = base.noise.sigma_v;
            sim.seed =
                derive_seed(derive_seed(base.master_seed, kTrajectoryLabel, k),
                            n);
            const RegressionData data = simulate(system, sim);

            SolverConfig config;
            config.sketch = base.variants.front();
            config.workers = base.worker_counts.front();
            config.max_iters = base.max_iters;
            config.stop_tol = base.stop_tol;
            config.master_seed = derive_seed(
                derive_seed(base.master_seed, kSolverLabel, k), 1, n);

            SolveReferences refs;
            refs.truth = &truth;
            const SolverResult solved =
                dihs_solve(data.u, data.y, config, refs);
            const double err = solved.trace.records.back().rel_err_g.value();
            seed_result.points.push_back({n, err});
            errors.push_back(err);
        }

        const bool at_floor =
            std::all_of(errors.begin(), errors.end(),
                        [&](double e) { return e < error_floor; });
        if (!at_floor) {
            seed_result.slope = fit_loglog_slope(sample_counts, errors);
            slopes.push_back(*seed_result.slope);
        }
        result.per_seed.push_back(std::move(seed_result));
    }

    if (slopes.empty()) {
        result.slope_skipped = true;
    } else {
        result.median_slope = median_of(slopes);
    }
    return result;
}

DiagnosisReport diagnose(const DenseMatrix& u, const SketchSpec& spec,
                         std::size_t repetitions, double sigma_u) {
    if (repetitions < 1) {
        throw InvalidSpecError("diagnose: need >= 1 repetition");
    }
    const DenseMatrix q = orthonormal_basis(u);

    DiagnosisReport report;
    std::size_t passes = 0;
    for (std::size_t k = 0; k < repetitions; ++k) {
        SketchSpec rep_spec = spec;
        rep_spec.seed = derive_seed(spec.seed, kDiagnoseLabel, k);
        const SketchOperator op = realize(rep_spec, u.rows());
        const double rho = embedding_distortion(op, q).rho_hat;
        report.rho_hats.push_back(rho);
        if (rho <= 0.5) ++passes;
    }
    report.pass_fraction =
        static_cast<double>(passes) / static_cast<double>(repetitions);
    report.conditioning = input_matrix_conditioning(u, sigma_u);
    return report;
}

}  // namespace sketchid
