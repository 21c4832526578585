#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sketchid/errors.hpp"
#include "sketchid/experiment.hpp"
#include "sketchid/solver.hpp"
#include "test_helpers.hpp"

using namespace sketchid;

namespace {

ExperimentPreset tiny_preset() {
    ExperimentPreset p;
    p.name = "tiny";
    p.state_dim = 3;
    p.input_dim = 2;
    p.output_dim = 2;
    p.horizon = 3;
    p.samples = 300;
    SketchSpec gaussian;
    gaussian.family = SketchFamily::gaussian;
    gaussian.s = 24;
    SketchSpec sjlt;
    sjlt.family = SketchFamily::sjlt;
    sjlt.s = 24;
    sjlt.l = 4;
    p.variants = {gaussian, sjlt};
    p.worker_counts = {1, 2};
    p.repetitions = 2;
    p.master_seed = 42;
    p.max_iters = 40;
    p.stop_tol = 1e-4;
    return p;
}

// Drops one comma-separated column from every line; wall-clock readings are
// the only payload that legitimately differs between identical runs.
std::string erase_column(const std::string& text, std::size_t column) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream fields(line);
        while (std::getline(fields, cell, ',')) cells.push_back(cell);
        if (line.empty() || line.back() == ',') cells.emplace_back();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == column) continue;
            if (out.tellp() > 0) out << (i == 0 ? '\n' : ',');
            else if (i > 0) out << ',';
            out << cells[i];
        }
    }
    return out.str();
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::filesystem::path fresh_dir(const std::string& leaf) {
    const auto dir = std::filesystem::temp_directory_path() / leaf;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("builtin presets are valid and known by name") {
    const auto names = builtin_preset_names();
    CHECK(names == std::vector<std::string>{"fig1-desk", "fig2-desk",
                                            "fig3-desk", "fig1", "fig2",
                                            "fig3"});
    for (const auto& name : names) {
        const ExperimentPreset preset = builtin_preset(name);
        CHECK_NOTHROW(preset.validate());
        CHECK(preset.name == name);
        REQUIRE(preset.variants.size() == 4);
        CHECK(preset.variants[0].family == SketchFamily::rademacher);
        CHECK(preset.variants[1].family == SketchFamily::uniform);
        CHECK(preset.variants[2].family == SketchFamily::sjlt);
        CHECK(preset.variants[3].family == SketchFamily::uniform_then_sjlt);
        CHECK(preset.worker_counts == std::vector<std::size_t>{5, 15, 20});
    }
    CHECK_THROWS_AS(builtin_preset("fig9"), InvalidSpecError);

    const ExperimentPreset full = builtin_preset("fig1");
    CHECK(full.state_dim == 80);
    CHECK(full.input_dim == 60);
    CHECK(full.output_dim == 70);
    CHECK(full.horizon == 30);
    CHECK(full.samples == 29971);
    CHECK(full.variants[0].s == 7200);
    CHECK(full.variants[3].s1 == 14400);
    CHECK(full.repetitions == 10);

    // Desk presets keep the full-scale shape: s as a multiple of the column
    // count and the same two-stage oversampling ratio.
    const ExperimentPreset desk = builtin_preset("fig1-desk");
    CHECK(desk.variants[0].s == 4 * desk.input_dim * desk.horizon);
    CHECK(desk.variants[3].s1 == 2 * desk.variants[3].s);
}

TEST_CASE("preset validation rejects each bad field") {
    auto broken = [](auto mutate) {
        ExperimentPreset p = tiny_preset();
        mutate(p);
        return p;
    };
    CHECK_NOTHROW(tiny_preset().validate());
    CHECK_THROWS_AS(
        broken([](auto& p) { p.name.clear(); }).validate(), InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.state_dim = 0; }).validate(), InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.horizon = 0; }).validate(), InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.samples = 5; }).validate(), InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.variants.clear(); }).validate(),
        InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.worker_counts.clear(); }).validate(),
        InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.worker_counts = {2, 0}; }).validate(),
        InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.repetitions = 0; }).validate(),
        InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.max_iters = 0; }).validate(),
        InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.stop_tol = 0.0; }).validate(),
        InvalidSpecError);
    CHECK_THROWS_AS(
        broken([](auto& p) { p.spectral_target = 1.0; }).validate(),
        InvalidSpecError);
}

TEST_CASE("instantiate is deterministic per repetition") {
    const ExperimentPreset p = tiny_preset();
    const PresetInstance a = instantiate(p, 0);
    const PresetInstance b = instantiate(p, 0);
    CHECK(oracle::bitwise_equal(a.system.a, b.system.a));
    CHECK(oracle::bitwise_equal(a.data.u, b.data.u));
    CHECK(oracle::bitwise_equal(a.data.y, b.data.y));
    CHECK(oracle::bitwise_equal(a.baseline, b.baseline));
    CHECK(oracle::bitwise_equal(a.truth, b.truth));

    const PresetInstance other = instantiate(p, 1);
    CHECK_FALSE(oracle::bitwise_equal(a.system.a, other.system.a));
    CHECK_FALSE(oracle::bitwise_equal(a.data.u, other.data.u));

    const std::size_t d = p.input_dim * p.horizon;
    CHECK(a.data.u.rows() == p.samples);
    CHECK(a.data.u.cols() == d);
    CHECK(a.data.y.rows() == p.samples);
    CHECK(a.data.y.cols() == p.output_dim);
    CHECK(a.truth.rows() == d);
    CHECK(a.truth.cols() == p.output_dim);
    CHECK(oracle::bitwise_equal(a.baseline, exact_ls(a.data.u, a.data.y)));

    CHECK_THROWS_AS(instantiate(p, 2), InvalidSpecError);
}

TEST_CASE("aggregate rows and trace file names pin their formats") {
    CellResult cell;
    cell.preset = "tiny";
    cell.family = SketchFamily::uniform_then_sjlt;
    cell.sketch_rows = 16;
    cell.workers = 3;
    cell.rep = 2;
    cell.seed = 99;
    cell.rel_err_ls = 0.5;
    cell.rel_err_g = 1.0 / 3.0;
    cell.iterations = 7;
    cell.wall_seconds = 1.5;
    CHECK(std::string(kAggregateHeader) ==
          "preset,family,s,r,rep,seed,rel_err_ls,rel_err_G,iterations,"
          "wall_seconds,contraction");
    CHECK(aggregate_row(cell) ==
          "tiny,uniform+sjlt,16,3,2,99,0.5,0.33333333333333331,7,1.5,");
    cell.contraction = 0.25;
    CHECK(aggregate_row(cell) ==
          "tiny,uniform+sjlt,16,3,2,99,0.5,0.33333333333333331,7,1.5,0.25");
    CHECK(trace_file_name(cell) ==
          "tiny_uniform+sjlt_s16_r3_rep2_trace.csv");
}

TEST_CASE("run_preset emits one row and one trace per cell, in order") {
    const ExperimentPreset p = tiny_preset();
    const auto dir = fresh_dir("sketchid_test_preset");
    const PresetResult result = run_preset(p, dir);

    REQUIRE(result.cells.size() == 8);  // 2 reps x 2 variants x 2 counts
    REQUIRE(result.trace_files.size() == 8);
    std::size_t i = 0;
    for (std::size_t rep = 0; rep < 2; ++rep) {
        for (SketchFamily family :
             {SketchFamily::gaussian, SketchFamily::sjlt}) {
            for (std::size_t r : {1ul, 2ul}) {
                const CellResult& cell = result.cells[i];
                CHECK(cell.rep == rep);
                CHECK(cell.family == family);
                CHECK(cell.workers == r);
                CHECK(cell.iterations >= 1);
                CHECK(std::filesystem::exists(result.trace_files[i]));
                CHECK(result.trace_files[i].filename().string() ==
                      trace_file_name(cell));
                ++i;
            }
        }
    }

    CHECK(result.aggregate_file.filename().string() == "tiny_aggregate.csv");
    const std::string csv = slurp(result.aggregate_file);
    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == kAggregateHeader);
    for (const CellResult& cell : result.cells) {
        REQUIRE(std::getline(lines, line));
        CHECK(line == aggregate_row(cell));
    }
    CHECK_FALSE(std::getline(lines, line));
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_preset is reproducible apart from wall-clock columns") {
    const ExperimentPreset p = tiny_preset();
    const auto dir_a = fresh_dir("sketchid_test_repro_a");
    const auto dir_b = fresh_dir("sketchid_test_repro_b");
    const PresetResult a = run_preset(p, dir_a);
    const PresetResult b = run_preset(p, dir_b);

    CHECK(erase_column(slurp(a.aggregate_file), 9) ==
          erase_column(slurp(b.aggregate_file), 9));
    REQUIRE(a.trace_files.size() == b.trace_files.size());
    for (std::size_t i = 0; i < a.trace_files.size(); ++i) {
        CHECK(erase_column(slurp(a.trace_files[i]), 1) ==
              erase_column(slurp(b.trace_files[i]), 1));
    }
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("run_cell in isolation reproduces the preset row") {
    const ExperimentPreset p = tiny_preset();
    const auto dir = fresh_dir("sketchid_test_isolation");
    const PresetResult full = run_preset(p, dir);
    // rep 1, sjlt variant, 2 workers sits at index 7 in run order.
    const CellResult& from_sweep = full.cells[7];
    const CellResult alone = run_cell(p, 1, 2, 1);
    CHECK(erase_column(aggregate_row(alone), 9) ==
          erase_column(aggregate_row(from_sweep), 9));
    CHECK(oracle::bitwise_equal(
        DenseMatrix(1, 1, {alone.rel_err_ls}),
        DenseMatrix(1, 1, {from_sweep.rel_err_ls})));

    CHECK_THROWS_AS(run_cell(p, 2, 2, 1), InvalidSpecError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("fig1-desk preset runs end to end") {
    const ExperimentPreset p = builtin_preset("fig1-desk");
    const auto dir = fresh_dir("sketchid_test_fig1_desk");
    const PresetResult result = run_preset(p, dir);
    REQUIRE(result.cells.size() == 36);  // 3 reps x 4 variants x 3 counts
    for (const CellResult& cell : result.cells) {
        INFO("family ", family_name(cell.family), " r=", cell.workers,
             " rep=", cell.rep);
        CHECK(cell.iterations <= p.max_iters);
        CHECK(cell.rel_err_ls < 0.05);
        CHECK(cell.rel_err_g < 0.5);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("fit_loglog_slope recovers exact and degenerate fits") {
    const std::vector<std::size_t> counts{100, 400, 1600, 6400};
    std::vector<double> errors;
    for (std::size_t n : counts) {
        errors.push_back(3.0 / std::sqrt(static_cast<double>(n)));
    }
    CHECK(fit_loglog_slope(counts, errors) ==
          doctest::Approx(-0.5).epsilon(1e-12));

    CHECK(fit_loglog_slope({100, 200, 400}, {0.25, 0.25, 0.25}) == 0.0);

    CHECK_THROWS_AS(fit_loglog_slope({100}, {0.5}), InvalidSpecError);
    CHECK_THROWS_AS(fit_loglog_slope({100, 200}, {0.5}), InvalidSpecError);
    CHECK_THROWS_AS(fit_loglog_slope({100, 200}, {0.5, 0.0}),
                    InvalidSpecError);
    CHECK_THROWS_AS(fit_loglog_slope({100, 200}, {0.5, -0.1}),
                    InvalidSpecError);
    CHECK_THROWS_AS(fit_loglog_slope({200, 200}, {0.5, 0.4}),
                    InvalidSpecError);
}

TEST_CASE("sweep_samples fits a slope per seed on noisy data") {
    ExperimentPreset base = tiny_preset();
    base.noise.sigma_w = 0.2;
    base.noise.sigma_v = 0.2;
    base.stop_tol = 1e-4;
    const SweepResult sweep = sweep_samples(base, {300, 1200}, 3);
    REQUIRE(sweep.per_seed.size() == 3);
    CHECK_FALSE(sweep.slope_skipped);
    REQUIRE(sweep.median_slope.has_value());
    for (const SweepSeedResult& seed : sweep.per_seed) {
        REQUIRE(seed.points.size() == 2);
        CHECK(seed.points[0].samples == 300);
        CHECK(seed.points[1].samples == 1200);
        CHECK(seed.points[0].rel_err_g > 0.0);
        REQUIRE(seed.slope.has_value());
        CHECK(std::isfinite(*seed.slope));
    }
}

TEST_CASE("sweep_samples skips the slope on noiseless data") {
    // With no process or measurement noise the estimate is exact up to the
    // solver's stopping tolerance, so every error sits at that floor and
    // fitting a decay rate would only measure noise in the stop criterion.
    ExperimentPreset base;
    base.name = "noiseless";
    base.state_dim = 3;
    base.input_dim = 1;
    base.output_dim = 2;
    base.horizon = 20;
    base.samples = 200;
    base.spectral_target = 0.3;  // truncation tail ~0.3^19, far below tol
    base.noise.sigma_w = 0.0;
    base.noise.sigma_v = 0.0;
    SketchSpec gaussian;
    gaussian.family = SketchFamily::gaussian;
    gaussian.s = 80;
    base.variants = {gaussian};
    base.worker_counts = {4};
    base.master_seed = 7;
    const SweepResult sweep = sweep_samples(base, {200, 400}, 2);
    CHECK(sweep.slope_skipped);
    CHECK_FALSE(sweep.median_slope.has_value());
    for (const SweepSeedResult& seed : sweep.per_seed) {
        CHECK_FALSE(seed.slope.has_value());
        for (const SweepPoint& point : seed.points) {
            CHECK(point.rel_err_g < 1e-2);
        }
    }
}

TEST_CASE("sweep_samples validates its inputs") {
    const ExperimentPreset base = tiny_preset();
    CHECK_THROWS_AS(sweep_samples(base, {300, 600}, 0), InvalidSpecError);
    CHECK_THROWS_AS(sweep_samples(base, {300}, 2), InvalidSpecError);
    CHECK_THROWS_AS(sweep_samples(base, {300, 5}, 2), InvalidSpecError);
}

TEST_CASE("diagnose reports zero distortion for exact embeddings") {
    const DenseMatrix u = oracle::random_matrix(40, 6, 31);
    SketchSpec identity;
    identity.family = SketchFamily::identity;
    identity.s = 40;
    const DiagnosisReport report = diagnose(u, identity, 5, 1.0);
    REQUIRE(report.rho_hats.size() == 5);
    for (double rho : report.rho_hats) CHECK(rho < 1e-9);
    CHECK(report.pass_fraction == 1.0);

    const ConditioningReport direct = input_matrix_conditioning(u, 1.0);
    CHECK(report.conditioning.min_eig == direct.min_eig);
    CHECK(report.conditioning.max_eig == direct.max_eig);
}

TEST_CASE("diagnose passes healthy sketches and flags undersized ones") {
    const DenseMatrix u = oracle::random_matrix(1024, 6, 32);
    SketchSpec gaussian;
    gaussian.family = SketchFamily::gaussian;
    gaussian.s = 384;
    gaussian.seed = 11;
    const DiagnosisReport healthy = diagnose(u, gaussian, 10, 1.0);
    CHECK(healthy.pass_fraction >= 0.9);

    SketchSpec undersized = gaussian;
    undersized.s = 3;  // fewer rows than the column space dimension
    const DiagnosisReport starved = diagnose(u, undersized, 5, 1.0);
    CHECK(starved.pass_fraction == 0.0);
    for (double rho : starved.rho_hats) CHECK(rho >= 0.999);

    const DiagnosisReport again = diagnose(u, gaussian, 10, 1.0);
    CHECK(again.rho_hats == healthy.rho_hats);

    CHECK_THROWS_AS(diagnose(u, gaussian, 0, 1.0), InvalidSpecError);
}

}  // TEST_SUITE
