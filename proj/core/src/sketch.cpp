#include "sketchid/sketch.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <numeric>
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

Eigen::Map<RowMat> as_eigen(DenseMatrix& m) {
    return {m.data(), static_cast<Eigen::Index>(m.rows()),
            static_cast<Eigen::Index>(m.cols())};
}

detail::DensePayload make_gaussian(std::size_t s, std::size_t n,
                                   RandomStream& rng) {
    DenseMatrix entries(s, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s));
    double* p = entries.data();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        p[i] = scale * rng.next_gaussian();
    }
    return {std::move(entries)};
}

detail::DensePayload make_rademacher(std::size_t s, std::size_t n,
                                     RandomStream& rng) {
    DenseMatrix entries(s, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s));
    double* p = entries.data();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        p[i] = scale * rng.next_sign();
    }
    return {std::move(entries)};
}

detail::RowSamplePayload make_uniform(std::size_t s, std::size_t n,
                                      RandomStream& rng) {
    detail::RowSamplePayload payload;
    payload.rows.resize(s);
    for (auto& r : payload.rows) r = rng.next_below(n);
    payload.scale = std::sqrt(static_cast<double>(n) / static_cast<double>(s));
    return payload;
}

detail::RosPayload make_ros(std::size_t s, std::size_t n, RandomStream& rng) {
    detail::RosPayload payload;
    payload.padded_n = std::bit_ceil(n);
    payload.signs.resize(n);
    for (auto& sg : payload.signs) {
        sg = static_cast<signed char>(rng.next_sign());
    }
    payload.coords.resize(s);
    for (auto& c : payload.coords) c = rng.next_below(payload.padded_n);
    payload.scale = std::sqrt(static_cast<double>(payload.padded_n) /
                              static_cast<double>(s));
    return payload;
}

// Exactly l distinct rows per column via partial Fisher-Yates on a
// persistent identity permutation; the swaps are undone after each column
// so setup stays O(l) per column.
detail::SjltPayload make_sjlt(std::size_t s, std::size_t n, std::size_t l,
                              RandomStream& rng) {
    detail::SjltPayload payload;
    payload.l = l;
    payload.value = 1.0 / std::sqrt(static_cast<double>(l));
    payload.rows.resize(n * l);
    payload.signs.resize(n * l);
    std::vector<std::uint64_t> perm(s);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> picks(l);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < l; ++k) {
            const std::size_t r =
                k + static_cast<std::size_t>(rng.next_below(s - k));
            std::swap(perm[k], perm[r]);
            picks[k] = r;
            payload.rows[j * l + k] = perm[k];
            payload.signs[j * l + k] = static_cast<signed char>(rng.next_sign());
        }
        for (std::size_t k = l; k-- > 0;) std::swap(perm[k], perm[picks[k]]);
    }
    return payload;
}

DenseMatrix apply_row_sample(const detail::RowSamplePayload& payload,
                             const DenseMatrix& a) {
    DenseMatrix out(payload.rows.size(), a.cols());
    for (std::size_t i = 0; i < payload.rows.size(); ++i) {
        const auto src = a.row(static_cast<std::size_t>(payload.rows[i]));
        double* dst = out.data() + i * a.cols();
        for (std::size_t j = 0; j < a.cols(); ++j) {
            dst[j] = payload.scale * src[j];
        }
    }
    return out;
}

DenseMatrix apply_ros(const detail::RosPayload& payload, std::size_t s,
                      const DenseMatrix& a) {
    const std::size_t n = a.rows();
    const std::size_t cols = a.cols();
    DenseMatrix out(s, cols);
    std::vector<double> buffer(payload.padded_n);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            buffer[i] = static_cast<double>(payload.signs[i]) * a(i, c);
        }
        std::fill(buffer.begin() + static_cast<std::ptrdiff_t>(n),
                  buffer.end(), 0.0);
        fwht_inplace(buffer);
        for (std::size_t k = 0; k < s; ++k) {
            out(k, c) =
                payload.scale * buffer[static_cast<std::size_t>(payload.coords[k])];
        }
    }
    return out;
}

DenseMatrix apply_sjlt(const detail::SjltPayload& payload, std::size_t s,
                       const DenseMatrix& a) {
    const std::size_t n = a.rows();
    const std::size_t cols = a.cols();
    const std::size_t l = payload.l;
    DenseMatrix out(s, cols);
    for (std::size_t j = 0; j < n; ++j) {
        const double* src = a.data() + j * cols;
        for (std::size_t k = 0; k < l; ++k) {
            const double coef =
                static_cast<double>(payload.signs[j * l + k]) * payload.value;
            double* dst =
                out.data() + static_cast<std::size_t>(payload.rows[j * l + k]) * cols;
            for (std::size_t c = 0; c < cols; ++c) dst[c] += coef * src[c];
        }
    }
    return out;
}

}  // namespace

std::string family_name(SketchFamily family) {
    switch (family) {
        case SketchFamily::identity: return "identity";
        case SketchFamily::gaussian: return "gaussian";
        case SketchFamily::rademacher: return "rademacher";
        case SketchFamily::uniform: return "uniform";
        case SketchFamily::ros: return "ros";
        case SketchFamily::sjlt: return "sjlt";
        case SketchFamily::uniform_then_sjlt: return "uniform+sjlt";
    }
    throw InvalidSpecError("family_name: unknown family");
}

SketchFamily parse_family(std::string_view name) {
    if (name == "identity") return SketchFamily::identity;
    if (name == "gaussian") return SketchFamily::gaussian;
    if (name == "rademacher") return SketchFamily::rademacher;
    if (name == "uniform") return SketchFamily::uniform;
    if (name == "ros") return SketchFamily::ros;
    if (name == "sjlt") return SketchFamily::sjlt;
    if (name == "uniform+sjlt" || name == "uniform_then_sjlt") {
        return SketchFamily::uniform_then_sjlt;
    }
    throw InvalidSpecError("parse_family: unknown sketch family '" +
                           std::string(name) + "'");
}

SketchOperator realize(const SketchSpec& spec, std::size_t n) {
    if (n == 0) {
        throw InvalidSpecError("realize: ambient dimension must be positive");
    }
    SketchOperator op;
    op.spec_ = spec;
    op.input_dim_ = n;

    if (spec.family == SketchFamily::identity) {
        op.spec_.s = n;
        op.output_dim_ = n;
        op.payload_ = detail::IdentityPayload{};
        return op;
    }

    if (spec.s < 1 || spec.s > n) {
        throw InvalidSpecError("realize: s = " + std::to_string(spec.s) +
                               " outside [1, N] with N = " + std::to_string(n));
    }
    op.output_dim_ = spec.s;
    RandomStream rng(spec.seed);

    switch (spec.family) {
        case SketchFamily::gaussian:
            op.payload_ = make_gaussian(spec.s, n, rng);
            break;
        case SketchFamily::rademacher:
            op.payload_ = make_rademacher(spec.s, n, rng);
            break;
        case SketchFamily::uniform:
            op.payload_ = make_uniform(spec.s, n, rng);
            break;
        case SketchFamily::ros:
            op.payload_ = make_ros(spec.s, n, rng);
            break;
        case SketchFamily::sjlt:
            if (spec.l < 1 || spec.l > spec.s) {
                throw InvalidSpecError(
                    "realize: sjlt requires 1 <= l <= s, got l = " +
                    std::to_string(spec.l));
            }
            op.payload_ = make_sjlt(spec.s, n, spec.l, rng);
            break;
        case SketchFamily::uniform_then_sjlt: {
            const std::size_t s1 = spec.s1 == 0 ? 2 * spec.s : spec.s1;
            if (s1 < spec.s || s1 > n) {
                throw InvalidSpecError(
                    "realize: uniform_then_sjlt requires s <= s1 <= N, got "
                    "s1 = " + std::to_string(s1));
            }
            if (spec.l < 1 || spec.l > spec.s) {
                throw InvalidSpecError(
                    "realize: sjlt stage requires 1 <= l <= s, got l = " +
                    std::to_string(spec.l));
            }
            op.spec_.s1 = s1;
            detail::TwoStagePayload payload;
            // Draw order: first stage fully, then the second stage.
            payload.first = make_uniform(s1, n, rng);
            payload.second = make_sjlt(spec.s, s1, spec.l, rng);
            payload.mid = s1;
            op.payload_ = std::move(payload);
            break;
        }
        default:
            throw InvalidSpecError("realize: unknown sketch family");
    }
    return op;
}

DenseMatrix apply(const SketchOperator& op, const DenseMatrix& a) {
    if (a.rows() != op.input_dim()) {
        throw DimensionMismatchError(
            "apply: operand has " + std::to_string(a.rows()) +
            " rows, operator expects " + std::to_string(op.input_dim()));
    }
    const std::size_t s = op.output_dim();
    return std::visit(
        [&](const auto& payload) -> DenseMatrix {
            using T = std::decay_t<decltype(payload)>;
            if constexpr (std::is_same_v<T, detail::IdentityPayload>) {
                return a;
            } else if constexpr (std::is_same_v<T, detail::DensePayload>) {
                DenseMatrix out(s, a.cols());
                as_eigen(out).noalias() =
                    as_eigen(payload.entries) * as_eigen(a);
                return out;
            } else if constexpr (std::is_same_v<T, detail::RowSamplePayload>) {
                return apply_row_sample(payload, a);
            } else if constexpr (std::is_same_v<T, detail::RosPayload>) {
                return apply_ros(payload, s, a);
            } else if constexpr (std::is_same_v<T, detail::SjltPayload>) {
                return apply_sjlt(payload, s, a);
            } else {
                static_assert(std::is_same_v<T, detail::TwoStagePayload>);
                const DenseMatrix mid = apply_row_sample(payload.first, a);
                return apply_sjlt(payload.second, s, mid);
            }
        },
        op.payload_);
}

DenseMatrix sketched_hessian(const SketchOperator& op, const DenseMatrix& u) {
    return gram(apply(op, u));
}

EmbeddingReport embedding_distortion(const SketchOperator& op,
                                     const DenseMatrix& q) {
    DenseMatrix qtq = gram(q);
    for (std::size_t i = 0; i < qtq.rows(); ++i) qtq(i, i) -= 1.0;
    const double defect = frobenius_norm(qtq);
    if (defect > 1e-6) {
        throw NotOrthonormalError(
            "embedding_distortion: ||Q^T Q - I||_F = " +
            std::to_string(defect) + " exceeds 1e-6");
    }
    const auto bounds = symmetric_extreme_eigenvalues(gram(apply(op, q)));
    return {bounds.min_eig, bounds.max_eig,
            std::max(1.0 - bounds.min_eig, bounds.max_eig - 1.0)};
}

}  // namespace sketchid
