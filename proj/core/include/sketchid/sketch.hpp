#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sketchid/dense_matrix.hpp"

namespace sketchid {

/// Supported random embedding families. Every family is normalized so that
/// E[S^T S] = I_N over the draw:
///   identity            S = I_N (s is forced to N; the exact, sketch-free case)
///   gaussian            i.i.d. N(0, 1/s) entries
///   rademacher          i.i.d. +-1/sqrt(s) entries
///   uniform             s rows sampled with replacement, each sqrt(N/s) e_j
///   ros                 randomized orthonormal system: sign flip, orthonormal
///                       Walsh-Hadamard transform on the power-of-two padding
///                       N', then s sampled rows scaled by sqrt(N'/s)
///   sjlt                sparse embedding; each column holds exactly l
///                       nonzeros, each +-1/sqrt(l), on l distinct rows
///   uniform_then_sjlt   two-stage S2 (S1 .): uniform down to s1 rows, then
///                       sjlt down to s rows
enum class SketchFamily {
    identity,
    gaussian,
    rademacher,
    uniform,
    ros,
    sjlt,
    uniform_then_sjlt,
};

std::string family_name(SketchFamily family);
/// Accepts the names above plus the CLI spelling "uniform+sjlt".
SketchFamily parse_family(std::string_view name);

/// Recipe for one random embedding draw.
struct SketchSpec {
    SketchFamily family = SketchFamily::gaussian;
    std::size_t s = 0;       // output rows (ignored for identity)
    std::size_t l = 8;       // nonzeros per column (sjlt stages only)
    std::size_t s1 = 0;      // intermediate rows for uniform_then_sjlt;
                             // 0 means the default 2*s
    std::uint64_t seed = 0;
};

namespace detail {

struct IdentityPayload {};

// gaussian / rademacher: the realized s x N matrix itself.
struct DensePayload {
    DenseMatrix entries;
};

// uniform: sampled source rows and the common row scale.
struct RowSamplePayload {
    std::vector<std::uint64_t> rows;
    double scale = 1.0;
};

// ros: per-coordinate signs, padded length, sampled transform coordinates.
struct RosPayload {
    std::size_t padded_n = 0;
    std::vector<signed char> signs;       // size N
    std::vector<std::uint64_t> coords;    // size s, over [0, padded_n)
    double scale = 1.0;
};

// sjlt: for input column j, nonzeros live at rows[j*l + k] with sign
// signs[j*l + k], value +-1/sqrt(l).
struct SjltPayload {
    std::size_t l = 0;
    std::vector<std::uint64_t> rows;
    std::vector<signed char> signs;
    double value = 1.0;
};

struct TwoStagePayload {
    RowSamplePayload first;  // N -> s1
    SjltPayload second;      // s1 -> s
    std::size_t mid = 0;     // s1
};

using SketchPayload =
    std::variant<IdentityPayload, DensePayload, RowSamplePayload, RosPayload,
                 SjltPayload, TwoStagePayload>;

}  // namespace detail

/// A realized embedding: an immutable linear map from R^{N x k} to
/// R^{s x k}, applied without ever materializing S for the structured
/// families.
class SketchOperator {
public:
    const SketchSpec& spec() const noexcept { return spec_; }
    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept { return output_dim_; }

    friend SketchOperator realize(const SketchSpec& spec, std::size_t n);
    friend DenseMatrix apply(const SketchOperator& op, const DenseMatrix& a);

private:
    SketchSpec spec_;
    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
    detail::SketchPayload payload_;
};

/// Draws the operator for `spec` against ambient dimension n. Deterministic
/// per (spec, n). Throws InvalidSpecError when the size constraints
/// (1 <= s <= N; sjlt: 1 <= l <= s; two-stage: s <= s1 <= N) are violated.
SketchOperator realize(const SketchSpec& spec, std::size_t n);

/// S * A. Fast paths: row gather for uniform, per-column Walsh-Hadamard
/// transform for ros, scatter-add for sjlt, dense product otherwise.
DenseMatrix apply(const SketchOperator& op, const DenseMatrix& a);

/// (SU)^T (SU), the curvature term of the sketched subproblem.
DenseMatrix sketched_hessian(const SketchOperator& op, const DenseMatrix& u);

/// Extreme squared singular values of S*Q for orthonormal Q, plus
/// rho_hat = max(1 - min, max - 1), the measured embedding distortion.
struct EmbeddingReport {
    double min_sq_singular;
    double max_sq_singular;
    double rho_hat;
};

/// Throws NotOrthonormalError when ||Q^T Q - I||_F > 1e-6.
EmbeddingReport embedding_distortion(const SketchOperator& op,
                                     const DenseMatrix& q);

}  // namespace sketchid
