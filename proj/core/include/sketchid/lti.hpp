#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "sketchid/dense_matrix.hpp"

namespace sketchid {

/// Discrete-time LTI system
///   x_{t+1} = A x_t + B u_t + w_t,   y_t = C x_t + D u_t + v_t
/// with state dimension n, input dimension m and output dimension p.
struct LtiSystem {
    DenseMatrix a;  // n x n
    DenseMatrix b;  // n x m
    DenseMatrix c;  // p x n
    DenseMatrix d;  // p x m

    std::size_t state_dim() const noexcept { return a.rows(); }
    std::size_t input_dim() const noexcept { return b.cols(); }
    std::size_t output_dim() const noexcept { return c.rows(); }

    /// Validates shapes and stability (spectral radius estimate must be
    /// at most 1 - 1e-6); throws DimensionMismatchError / NotStableError.
    static LtiSystem create(DenseMatrix a, DenseMatrix b, DenseMatrix c,
                            DenseMatrix d);
};

struct SimulationConfig {
    std::size_t horizon = 1;  // T: length of the input window per row
    std::size_t samples = 1;  // N: number of regression rows
    double sigma_u = 1.0;     // input standard deviation
    double sigma_w = 0.0;     // process-noise standard deviation
    double sigma_v = 0.0;     // measurement-noise standard deviation
    std::uint64_t seed = 0;

    /// Total trajectory length T + N - 1.
    std::size_t total_steps() const noexcept { return horizon + samples - 1; }
};

/// First `horizon` Markov parameters, stored as the p x (m*T) block matrix
/// [D, CB, CAB, ..., CA^{T-2}B].
struct MarkovParams {
    DenseMatrix g;
    std::size_t horizon = 0;
};

/// Regression pair built from one trajectory: row i of u holds the reversed
/// input window [u_{T+i}^T, u_{T+i-1}^T, ..., u_{i+1}^T] and row i of y holds
/// y_{T+i}^T (times are 1-based, i = 0..N-1).
struct RegressionData {
    DenseMatrix u;  // N x (m*T)
    DenseMatrix y;  // N x p
    SimulationConfig config;
};

/// Draws a random system: A entries uniform on the integers {1..5}, then
/// rescaled so the spectral-radius estimate equals `spectral_target`;
/// B, C, D entries uniform on the integers {-2..2}. Deterministic in `seed`.
LtiSystem generate_system(std::size_t n, std::size_t m, std::size_t p,
                          std::uint64_t seed, double spectral_target = 0.95);

MarkovParams markov_params(const LtiSystem& sys, std::size_t horizon);

/// Simulates one trajectory from x_1 = 0 over t = 1..T+N-1 and assembles the
/// regression pair. Inputs and the two noise sources are standard normal
/// draws scaled by their sigmas, taken from three independent substreams of
/// config.seed, so changing one sigma never changes the other realizations.
/// Throws OverflowError when any state entry exceeds 1e12 in magnitude.
RegressionData simulate(const LtiSystem& sys, const SimulationConfig& config);

struct ConditioningReport {
    double min_eig;      // smallest eigenvalue of U^T U
    double max_eig;      // largest eigenvalue of U^T U
    double lower_bound;  // N * sigma_u^2 / 2
    double upper_bound;  // 2 * N * sigma_u^2
    bool lower_ok;
    bool upper_ok;
};

/// Extreme eigenvalues of U^T U checked against the concentration bounds
/// [N sigma_u^2 / 2, 2 N sigma_u^2] expected for white inputs.
ConditioningReport input_matrix_conditioning(const DenseMatrix& u,
                                             double sigma_u);

// --- persistence -----------------------------------------------------------
// Plain key=value metadata files next to the DMX1 payloads.

void write_key_value_file(const std::filesystem::path& path,
                          const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> read_key_value_file(
    const std::filesystem::path& path);

/// Writes A.dmx, B.dmx, C.dmx, D.dmx and system.meta into `dir`.
void save_system(const LtiSystem& sys, const std::filesystem::path& dir,
                 std::uint64_t seed, double spectral_target);
/// Loads and validates a system saved by save_system.
LtiSystem load_system(const std::filesystem::path& dir);

/// Writes U.dmx, Y.dmx, G.dmx and sim.meta into `dir`.
void save_regression(const RegressionData& data, const MarkovParams& truth,
                     const std::filesystem::path& dir);

}  // namespace sketchid
