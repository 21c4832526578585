#include "sketchid/lti.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

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

constexpr double kStateLimit = 1e12;

// Substream labels for derive_seed; fixed so files and docs can state them.
constexpr std::uint64_t kStreamA = 0xA;
constexpr std::uint64_t kStreamB = 0xB;
constexpr std::uint64_t kStreamC = 0xC;
constexpr std::uint64_t kStreamD = 0xD;
constexpr std::uint64_t kStreamInput = 1;
constexpr std::uint64_t kStreamProcess = 2;
constexpr std::uint64_t kStreamMeasure = 3;

DenseMatrix draw_integer_matrix(std::size_t rows, std::size_t cols,
                                std::int64_t lo, std::int64_t hi,
                                std::uint64_t key) {
    RandomStream rng(key);
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            m(i, j) = static_cast<double>(rng.next_int(lo, hi));
        }
    }
    return m;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

LtiSystem LtiSystem::create(DenseMatrix a, DenseMatrix b, DenseMatrix c,
                            DenseMatrix d) {
    const std::size_t n = a.rows();
    const std::size_t m = b.cols();
    const std::size_t p = c.rows();
    if (a.cols() != n || b.rows() != n || c.cols() != n || d.rows() != p ||
        d.cols() != m) {
        throw DimensionMismatchError("LtiSystem: inconsistent matrix shapes");
    }
    const double rho = spectral_radius_estimate(a);
    if (!(rho <= 1.0 - 1e-6)) {
        throw NotStableError("LtiSystem: spectral radius estimate " +
                             std::to_string(rho) + " is not below 1 - 1e-6");
    }
    return {std::move(a), std::move(b), std::move(c), std::move(d)};
}

LtiSystem generate_system(std::size_t n, std::size_t m, std::size_t p,
                          std::uint64_t seed, double spectral_target) {
    if (n == 0 || m == 0 || p == 0) {
        throw InvalidSpecError("generate_system: dimensions must be positive");
    }
    if (!(spectral_target > 0.0) || !(spectral_target <= 1.0 - 1e-6)) {
        throw InvalidSpecError(
            "generate_system: spectral_target must lie in (0, 1 - 1e-6]");
    }
    DenseMatrix a =
        draw_integer_matrix(n, n, 1, 5, derive_seed(seed, kStreamA));
    const double rho = spectral_radius_estimate(a);
    a *= spectral_target / rho;
    DenseMatrix b =
        draw_integer_matrix(n, m, -2, 2, derive_seed(seed, kStreamB));
    DenseMatrix c =
        draw_integer_matrix(p, n, -2, 2, derive_seed(seed, kStreamC));
    DenseMatrix d =
        draw_integer_matrix(p, m, -2, 2, derive_seed(seed, kStreamD));
    return LtiSystem::create(std::move(a), std::move(b), std::move(c),
                             std::move(d));
}

MarkovParams markov_params(const LtiSystem& sys, std::size_t horizon) {
    if (horizon == 0) {
        throw InvalidSpecError("markov_params: horizon must be positive");
    }
    const std::size_t m = sys.input_dim();
    const std::size_t p = sys.output_dim();
    DenseMatrix g(p, m * horizon);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < m; ++j) g(i, j) = sys.d(i, j);
    }
    // Running power: block k (k >= 1) is C * A^{k-1} * B.
    DenseMatrix power = sys.b;
    for (std::size_t k = 1; k < horizon; ++k) {
        const DenseMatrix block = matmul(sys.c, power);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                g(i, k * m + j) = block(i, j);
            }
        }
        if (k + 1 < horizon) power = matmul(sys.a, power);
    }
    return {std::move(g), horizon};
}

RegressionData simulate(const LtiSystem& sys, const SimulationConfig& config) {
    if (config.horizon == 0 || config.samples == 0) {
        throw InvalidSpecError("simulate: horizon and samples must be positive");
    }
    if (config.sigma_u < 0.0 || config.sigma_w < 0.0 || config.sigma_v < 0.0) {
        throw InvalidSpecError("simulate: sigmas must be nonnegative");
    }
    const std::size_t n = sys.state_dim();
    const std::size_t m = sys.input_dim();
    const std::size_t p = sys.output_dim();
    const std::size_t horizon = config.horizon;
    const std::size_t samples = config.samples;
    const std::size_t steps = config.total_steps();

    RandomStream input_rng(derive_seed(config.seed, kStreamInput));
    RandomStream process_rng(derive_seed(config.seed, kStreamProcess));
    RandomStream measure_rng(derive_seed(config.seed, kStreamMeasure));

    DenseMatrix inputs(steps, m);   // row t-1 holds u_t
    DenseMatrix outputs(steps, p);  // row t-1 holds y_t

    const auto a = as_eigen(sys.a);
    const auto b = as_eigen(sys.b);
    const auto c = as_eigen(sys.c);
    const auto d = as_eigen(sys.d);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd u_t(static_cast<Eigen::Index>(m));
    Eigen::VectorXd w_t(static_cast<Eigen::Index>(n));
    Eigen::VectorXd y_t(static_cast<Eigen::Index>(p));

    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < m; ++j) {
            u_t[static_cast<Eigen::Index>(j)] =
                config.sigma_u * input_rng.next_gaussian();
        }
        for (std::size_t j = 0; j < n; ++j) {
            w_t[static_cast<Eigen::Index>(j)] =
                config.sigma_w * process_rng.next_gaussian();
        }
        y_t.noalias() = c * x + d * u_t;
        for (std::size_t j = 0; j < p; ++j) {
            y_t[static_cast<Eigen::Index>(j)] +=
                config.sigma_v * measure_rng.next_gaussian();
        }
        for (std::size_t j = 0; j < m; ++j) {
            inputs(t, j) = u_t[static_cast<Eigen::Index>(j)];
        }
        for (std::size_t j = 0; j < p; ++j) {
            outputs(t, j) = y_t[static_cast<Eigen::Index>(j)];
        }
        x = (a * x + b * u_t + w_t).eval();
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            if (!(std::abs(x[j]) <= kStateLimit)) {
                throw OverflowError(
                    "simulate: state entry exceeded 1e12 at step " +
                    std::to_string(t + 1));
            }
        }
    }

    // Row i covers times T+i down to i+1; adjacent rows share m*(T-1)
    // entries verbatim, copied from the same stored input rows.
    DenseMatrix u_mat(samples, m * horizon);
    DenseMatrix y_mat(samples, p);
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t block = 0; block < horizon; ++block) {
            const std::size_t time_index = horizon + i - block - 1;
            const auto src = inputs.row(time_index);
            double* dst = u_mat.data() + i * (m * horizon) + block * m;
            for (std::size_t j = 0; j < m; ++j) dst[j] = src[j];
        }
        const auto src = outputs.row(horizon + i - 1);
        for (std::size_t j = 0; j < p; ++j) y_mat(i, j) = src[j];
    }
    return {std::move(u_mat), std::move(y_mat), config};
}

ConditioningReport input_matrix_conditioning(const DenseMatrix& u,
                                             double sigma_u) {
    const auto bounds = symmetric_extreme_eigenvalues(gram(u));
    const double scale =
        static_cast<double>(u.rows()) * sigma_u * sigma_u;
    ConditioningReport report{};
    report.min_eig = bounds.min_eig;
    report.max_eig = bounds.max_eig;
    report.lower_bound = 0.5 * scale;
    report.upper_bound = 2.0 * scale;
    report.lower_ok = bounds.min_eig >= report.lower_bound;
    report.upper_ok = bounds.max_eig <= report.upper_bound;
    return report;
}

void write_key_value_file(const std::filesystem::path& path,
                          const std::map<std::string, std::string>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("write_key_value_file: cannot open " + path.string());
    for (const auto& [key, value] : entries) {
        out << key << "=" << value << "\n";
    }
    if (!out) throw IoError("write_key_value_file: short write to " + path.string());
}

std::map<std::string, std::string> read_key_value_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_key_value_file: cannot open " + path.string());
    std::map<std::string, std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw IoError("read_key_value_file: malformed line '" + line +
                          "' in " + path.string());
        }
        entries[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return entries;
}

void save_system(const LtiSystem& sys, const std::filesystem::path& dir,
                 std::uint64_t seed, double spectral_target) {
    std::filesystem::create_directories(dir);
    save_dmx(sys.a, dir / "A.dmx");
    save_dmx(sys.b, dir / "B.dmx");
    save_dmx(sys.c, dir / "C.dmx");
    save_dmx(sys.d, dir / "D.dmx");
    write_key_value_file(dir / "system.meta",
                         {{"n", std::to_string(sys.state_dim())},
                          {"m", std::to_string(sys.input_dim())},
                          {"p", std::to_string(sys.output_dim())},
                          {"seed", std::to_string(seed)},
                          {"spectral_target", format_double(spectral_target)}});
}

LtiSystem load_system(const std::filesystem::path& dir) {
    return LtiSystem::create(load_dmx(dir / "A.dmx"), load_dmx(dir / "B.dmx"),
                             load_dmx(dir / "C.dmx"), load_dmx(dir / "D.dmx"));
}

void save_regression(const RegressionData& data, const MarkovParams& truth,
                     const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_dmx(data.u, dir / "U.dmx");
    save_dmx(data.y, dir / "Y.dmx");
    save_dmx(truth.g, dir / "G.dmx");
    write_key_value_file(
        dir / "sim.meta",
        {{"horizon", std::to_string(data.config.horizon)},
         {"samples", std::to_string(data.config.samples)},
         {"seed", std::to_string(data.config.seed)},
         {"sigma_u", format_double(data.config.sigma_u)},
         {"sigma_v", format_double(data.config.sigma_v)},
         {"sigma_w", format_double(data.config.sigma_w)}});
}

}  // namespace sketchid
