// Command-line front end: generate systems, simulate trajectories, solve
// the regression directly or iteratively, run experiment presets, sweep the
// sample count, and diagnose sketch embeddings. Matrices travel as DMX1
// files, metadata as key=value files, results as CSV.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sketchid/dense_matrix.hpp"
#include "sketchid/errors.hpp"
#include "sketchid/experiment.hpp"
#include "sketchid/linalg.hpp"
#include "sketchid/lti.hpp"
#include "sketchid/sketch.hpp"
#include "sketchid/solver.hpp"

using namespace sketchid;

namespace {

namespace fs = std::filesystem;

struct SketchFlags {
    std::string family = "gaussian";
    std::size_t s = 0;
    std::size_t l = 8;
    std::size_t s1 = 0;
    std::uint64_t seed = 0;
};

void add_sketch_flags(CLI::App* cmd, SketchFlags& f) {
    cmd->add_option("--sketch", f.family,
                    "family: gaussian, rademacher, uniform, ros, sjlt, "
                    "uniform+sjlt, identity")
        ->capture_default_str();
    cmd->add_option("--s", f.s, "sketch rows (ignored for identity)");
    cmd->add_option("--l", f.l, "nonzeros per column for sjlt stages")
        ->capture_default_str();
    cmd->add_option("--s1", f.s1,
                    "first-stage rows for uniform+sjlt (0 means 2s)");
    cmd->add_option("--sketch-seed", f.seed, "seed for standalone sketches");
}

SketchSpec to_spec(const SketchFlags& f) {
    SketchSpec spec;
    spec.family = parse_family(f.family);
    spec.s = f.s;
    spec.l = f.l;
    spec.s1 = f.s1;
    spec.seed = f.seed;
    return spec;
}

DenseMatrix load_required(const fs::path& path, const char* what) {
    if (!fs::exists(path)) {
        throw IoError(std::string(what) + " not found at " + path.string());
    }
    return load_dmx(path);
}

int cmd_generate(std::size_t n, std::size_t m, std::size_t p,
                 std::uint64_t seed, double target, const fs::path& out) {
    const LtiSystem sys = generate_system(n, m, p, seed, target);
    save_system(sys, out, seed, target);
    std::printf("system (n=%zu, m=%zu, p=%zu) seed %" PRIu64
                " written to %s\n",
                n, m, p, seed, out.string().c_str());
    std::printf("spectral radius estimate %.6f (target %.6f)\n",
                spectral_radius_estimate(sys.a), target);
    return 0;
}

int cmd_simulate(const fs::path& system_dir, const SimulationConfig& sim,
                 const fs::path& out) {
    const LtiSystem sys = load_system(system_dir);
    const RegressionData data = simulate(sys, sim);
    const MarkovParams truth = markov_params(sys, sim.horizon);
    save_regression(data, truth, out);
    std::printf("U (%zu x %zu), Y (%zu x %zu), G (%zu x %zu) written to %s\n",
                data.u.rows(), data.u.cols(), data.y.rows(), data.y.cols(),
                truth.g.rows(), truth.g.cols(), out.string().c_str());
    return 0;
}

int cmd_baseline(const fs::path& data_dir, const fs::path& out) {
    const DenseMatrix u = load_required(data_dir / "U.dmx", "U.dmx");
    const DenseMatrix y = load_required(data_dir / "Y.dmx", "Y.dmx");
    const DenseMatrix x_ls = exact_ls(u, y);
    save_dmx(x_ls, out);
    std::printf("least-squares solution (%zu x %zu) written to %s\n",
                x_ls.rows(), x_ls.cols(), out.string().c_str());
    const fs::path g_path = data_dir / "G.dmx";
    if (fs::exists(g_path)) {
        const DenseMatrix truth = transpose(load_dmx(g_path));
        std::printf("rel err vs true Markov parameters: %.6e\n",
                    frobenius_distance(x_ls, truth) / frobenius_norm(truth));
    }
    return 0;
}

int cmd_solve(const fs::path& data_dir, const SketchFlags& sketch,
              SolverConfig config, bool skip_baseline, const fs::path& out) {
    const DenseMatrix u = load_required(data_dir / "U.dmx", "U.dmx");
    const DenseMatrix y = load_required(data_dir / "Y.dmx", "Y.dmx");
    config.sketch = to_spec(sketch);

    std::optional<DenseMatrix> baseline;
    if (!skip_baseline) baseline = exact_ls(u, y);
    std::optional<DenseMatrix> truth;
    if (fs::exists(data_dir / "G.dmx")) {
        truth = transpose(load_dmx(data_dir / "G.dmx"));
    }
    SolveReferences refs;
    if (baseline) refs.baseline = &*baseline;
    if (truth) refs.truth = &*truth;

    const SolverResult result = dihs_solve(u, y, config, refs);

    fs::create_directories(out);
    save_dmx(result.x, out / "X.dmx");
    write_trace_csv(result.trace, out / "trace.csv");

    const TraceRecord& last = result.trace.records.back();
    std::printf("%s after %zu iterations (%.3f s)\n",
                result.converged ? "converged" : "stopped",
                result.iterations, last.wall_seconds);
    if (last.rel_err_ls) {
        std::printf("rel err vs least-squares solution: %.6e\n",
                    *last.rel_err_ls);
    }
    if (last.rel_err_g) {
        std::printf("rel err vs true Markov parameters: %.6e\n",
                    *last.rel_err_g);
    }
    std::printf("solution and trace written to %s\n", out.string().c_str());
    return result.converged ? 0 : 3;
}

int cmd_experiment(const std::string& preset_name, std::size_t reps,
                   const fs::path& out) {
    ExperimentPreset preset = builtin_preset(preset_name);
    if (reps > 0) preset.repetitions = reps;
    const PresetResult result = run_preset(preset, out);
    std::size_t converged = 0;
    for (const CellResult& cell : result.cells) {
        if (cell.iterations < preset.max_iters) ++converged;
    }
    std::printf("%zu cells (%zu converged before the iteration cap)\n",
                result.cells.size(), converged);
    std::printf("aggregate: %s\n", result.aggregate_file.string().c_str());
    std::printf("traces: %zu files in %s\n", result.trace_files.size(),
                out.string().c_str());
    return 0;
}

int cmd_sweep(ExperimentPreset base, const std::vector<std::size_t>& samples,
              std::size_t seeds, const fs::path& out) {
    if (!samples.empty()) base.samples = samples.front();
    const SweepResult sweep = sweep_samples(base, samples, seeds);

    std::FILE* csv = std::fopen(out.string().c_str(), "wb");
    if (!csv) throw IoError("cannot open " + out.string());
    std::fprintf(csv, "seed,samples,rel_err_G,log_samples,log_rel_err_G\n");
    for (const SweepSeedResult& seed : sweep.per_seed) {
        for (const SweepPoint& point : seed.points) {
            std::fprintf(csv, "%" PRIu64 ",%zu,%.17g,%.17g,%.17g\n",
                         seed.seed, point.samples, point.rel_err_g,
                         std::log(static_cast<double>(point.samples)),
                         std::log(point.rel_err_g));
        }
    }
    std::fclose(csv);

    for (const SweepSeedResult& seed : sweep.per_seed) {
        if (seed.slope) {
            std::printf("seed %" PRIu64 ": slope %.4f\n", seed.seed,
                        *seed.slope);
        } else {
            std::printf("seed %" PRIu64
                        ": slope skipped (errors at the solver floor)\n",
                        seed.seed);
        }
    }
    if (sweep.median_slope) {
        std::printf("median slope %.4f\n", *sweep.median_slope);
    } else {
        std::printf("median slope skipped: every run sat at the solver "
                    "floor (noiseless data)\n");
    }
    std::printf("points written to %s\n", out.string().c_str());
    return 0;
}

int cmd_diagnose(const fs::path& u_path, const SketchFlags& sketch,
                 std::size_t reps, double sigma_u) {
    const DenseMatrix u = load_required(u_path, "U matrix");
    SketchSpec spec = to_spec(sketch);
    if (spec.family == SketchFamily::identity) spec.s = u.rows();
    const DiagnosisReport report = diagnose(u, spec, reps, sigma_u);
    for (std::size_t k = 0; k < report.rho_hats.size(); ++k) {
        std::printf("rep %zu: rho_hat %.4f\n", k, report.rho_hats[k]);
    }
    std::printf("pass fraction (rho_hat <= 0.5): %.2f\n",
                report.pass_fraction);
    const ConditioningReport& c = report.conditioning;
    std::printf("input conditioning: eig(U^T U) in [%.6g, %.6g], bounds "
                "[%.6g, %.6g], lower %s, upper %s\n",
                c.min_eig, c.max_eig, c.lower_bound, c.upper_bound,
                c.lower_ok ? "ok" : "VIOLATED",
                c.upper_ok ? "ok" : "VIOLATED");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov-parameter identification via distributed "
                 "iterative Hessian sketching"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "key=value file mirroring the flags; command-line flags "
                   "take precedence");

    // generate
    auto* gen = app.add_subcommand("generate", "draw a random stable system");
    gen->configurable();
    gen->fallthrough();
    std::size_t gen_n = 4, gen_m = 2, gen_p = 2;
    std::uint64_t gen_seed = 0;
    double gen_target = 0.95;
    std::string gen_out = "system";
    gen->add_option("--n", gen_n, "state dimension")->capture_default_str();
    gen->add_option("--m", gen_m, "input dimension")->capture_default_str();
    gen->add_option("--p", gen_p, "output dimension")->capture_default_str();
    gen->add_option("--seed", gen_seed, "generator seed")
        ->capture_default_str();
    gen->add_option("--spectral-target", gen_target,
                    "spectral radius of A after rescaling")
        ->capture_default_str();
    gen->add_option("--out", gen_out, "output directory")
        ->capture_default_str();

    // simulate
    auto* sim_cmd = app.add_subcommand(
        "simulate", "roll out one trajectory and assemble U, Y, G");
    sim_cmd->configurable();
    sim_cmd->fallthrough();
    std::string sim_system = "system";
    SimulationConfig sim;
    sim.sigma_w = 0.1;
    sim.sigma_v = 0.1;
    std::string sim_out = "data";
    sim_cmd->add_option("--system", sim_system, "directory from `generate`")
        ->capture_default_str();
    sim_cmd->add_option("--horizon", sim.horizon,
                        "T, Markov parameters per row")
        ->required();
    sim_cmd->add_option("--samples", sim.samples, "N, regression rows")
        ->required();
    sim_cmd->add_option("--sigma-u", sim.sigma_u, "input std deviation")
        ->capture_default_str();
    sim_cmd->add_option("--sigma-w", sim.sigma_w, "process noise std")
        ->capture_default_str();
    sim_cmd->add_option("--sigma-v", sim.sigma_v, "measurement noise std")
        ->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "trajectory seed")
        ->capture_default_str();
    sim_cmd->add_option("--out", sim_out, "output directory")
        ->capture_default_str();

    // baseline
    auto* base_cmd = app.add_subcommand(
        "baseline", "exact least-squares solve of the regression");
    base_cmd->configurable();
    base_cmd->fallthrough();
    std::string base_data = "data";
    std::string base_out = "X_ls.dmx";
    base_cmd->add_option("--data", base_data, "directory from `simulate`")
        ->capture_default_str();
    base_cmd->add_option("--out", base_out, "output DMX file")
        ->capture_default_str();

    // solve
    auto* solve_cmd = app.add_subcommand(
        "solve", "distributed iterative Hessian-sketch solve");
    solve_cmd->configurable();
    solve_cmd->fallthrough();
    std::string solve_data = "data";
    std::string solve_out = "run";
    SketchFlags solve_sketch;
    SolverConfig solver;
    bool skip_baseline = false;
    bool no_resample = false;
    solve_cmd->add_option("--data", solve_data, "directory from `simulate`")
        ->capture_default_str();
    add_sketch_flags(solve_cmd, solve_sketch);
    solve_cmd->add_option("-r,--workers", solver.workers, "worker count")
        ->capture_default_str();
    solve_cmd->add_option("--max-iters", solver.max_iters, "iteration cap")
        ->capture_default_str();
    solve_cmd->add_option("--stop-tol", solver.stop_tol,
                          "stop when the step norm falls below this")
        ->capture_default_str();
    solve_cmd->add_option("--master-seed", solver.master_seed,
                          "seed all worker sketches derive from")
        ->capture_default_str();
    solve_cmd->add_option("--threads", solver.threads,
                          "thread pool size (0 = hardware)")
        ->capture_default_str();
    solve_cmd->add_flag("--share-worker-seeds", solver.share_worker_seeds,
                        "give every worker the same sketch stream");
    solve_cmd->add_flag("--no-resample", no_resample,
                        "abort immediately on a singular sketched Hessian");
    solve_cmd->add_flag("--skip-baseline", skip_baseline,
                        "skip the exact solve used for rel_err_ls tracking");
    solve_cmd->add_option("--out", solve_out, "output directory")
        ->capture_default_str();

    // experiment
    auto* exp_cmd = app.add_subcommand(
        "experiment", "run a named preset over families and worker counts");
    exp_cmd->configurable();
    exp_cmd->fallthrough();
    std::string exp_preset;
    std::size_t exp_reps = 0;
    std::string exp_out = "results";
    bool exp_list = false;
    exp_cmd->add_option("preset", exp_preset, "preset name (see --list)");
    exp_cmd->add_flag("--list", exp_list, "list available presets");
    exp_cmd->add_option("--reps", exp_reps,
                        "override the preset's repetition count (0 = keep)");
    exp_cmd->add_option("--out", exp_out, "output directory")
        ->capture_default_str();

    // sweep-n
    auto* sweep_cmd = app.add_subcommand(
        "sweep-n", "fit the error decay rate against the sample count");
    sweep_cmd->configurable();
    sweep_cmd->fallthrough();
    ExperimentPreset sweep_base;
    sweep_base.name = "sweep-n";
    sweep_base.noise.sigma_w = 0.1;
    sweep_base.noise.sigma_v = 0.1;
    SketchFlags sweep_sketch;
    std::size_t sweep_workers = 4;
    std::vector<std::size_t> sweep_samples_list;
    std::size_t sweep_seeds = 5;
    std::string sweep_out = "sweep.csv";
    sweep_cmd->add_option("--n", sweep_base.state_dim, "state dimension")
        ->required();
    sweep_cmd->add_option("--m", sweep_base.input_dim, "input dimension")
        ->required();
    sweep_cmd->add_option("--p", sweep_base.output_dim, "output dimension")
        ->required();
    sweep_cmd->add_option("--horizon", sweep_base.horizon, "T")->required();
    sweep_cmd
        ->add_option("--samples", sweep_samples_list,
                     "comma-separated N values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--seeds", sweep_seeds, "repetitions")
        ->capture_default_str();
    sweep_cmd
        ->add_option("--spectral-target", sweep_base.spectral_target,
                     "spectral radius of generated systems")
        ->capture_default_str();
    sweep_cmd->add_option("--sigma-u", sweep_base.noise.sigma_u, "input std")
        ->capture_default_str();
    sweep_cmd->add_option("--sigma-w", sweep_base.noise.sigma_w,
                          "process noise std")
        ->capture_default_str();
    sweep_cmd->add_option("--sigma-v", sweep_base.noise.sigma_v,
                          "measurement noise std")
        ->capture_default_str();
    add_sketch_flags(sweep_cmd, sweep_sketch);
    sweep_cmd->add_option("-r,--workers", sweep_workers, "worker count")
        ->capture_default_str();
    sweep_cmd->add_option("--max-iters", sweep_base.max_iters,
                          "iteration cap")
        ->capture_default_str();
    sweep_cmd->add_option("--stop-tol", sweep_base.stop_tol, "stop tolerance")
        ->capture_default_str();
    sweep_cmd->add_option("--master-seed", sweep_base.master_seed,
                          "master seed")
        ->capture_default_str();
    sweep_cmd->add_option("--out", sweep_out, "points CSV")
        ->capture_default_str();

    // diagnose
    auto* diag_cmd = app.add_subcommand(
        "diagnose", "embedding distortion and input conditioning report");
    diag_cmd->configurable();
    diag_cmd->fallthrough();
    std::string diag_u = "data/U.dmx";
    SketchFlags diag_sketch;
    std::size_t diag_reps = 10;
    double diag_sigma_u = 1.0;
    diag_cmd->add_option("--u", diag_u, "U matrix (DMX1)")
        ->capture_default_str();
    add_sketch_flags(diag_cmd, diag_sketch);
    diag_cmd->add_option("--reps", diag_reps, "independent sketch draws")
        ->capture_default_str();
    diag_cmd->add_option("--sigma-u", diag_sigma_u,
                         "input std used for the conditioning bounds")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_generate(gen_n, gen_m, gen_p, gen_seed, gen_target,
                                gen_out);
        }
        if (sim_cmd->parsed()) return cmd_simulate(sim_system, sim, sim_out);
        if (base_cmd->parsed()) return cmd_baseline(base_data, base_out);
        if (solve_cmd->parsed()) {
            solver.resample_on_singular = !no_resample;
            return cmd_solve(solve_data, solve_sketch, solver, skip_baseline,
                             solve_out);
        }
        if (exp_cmd->parsed()) {
            if (exp_list) {
                for (const std::string& name : builtin_preset_names()) {
                    std::printf("%s\n", name.c_str());
                }
                return 0;
            }
            if (exp_preset.empty()) {
                std::fprintf(stderr,
                             "experiment: preset name required "
                             "(try --list)\n");
                return 2;
            }
            return cmd_experiment(exp_preset, exp_reps, exp_out);
        }
        if (sweep_cmd->parsed()) {
            SketchSpec spec = to_spec(sweep_sketch);
            sweep_base.variants = {spec};
            sweep_base.worker_counts = {sweep_workers};
            return cmd_sweep(sweep_base, sweep_samples_list, sweep_seeds,
                             sweep_out);
        }
        if (diag_cmd->parsed()) {
            return cmd_diagnose(diag_u, diag_sketch, diag_reps, diag_sigma_u);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
