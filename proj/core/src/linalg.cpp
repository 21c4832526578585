#include "sketchid/linalg.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "sketchid/errors.hpp"
#include "sketchid/rng.hpp"

namespace sketchid {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

ConstMap as_eigen(const DenseMatrix& m) {
    return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                    static_cast<Eigen::Index>(m.cols()));
}

Map as_eigen(DenseMatrix& m) {
    return Map(m.data(), static_cast<Eigen::Index>(m.rows()),
               static_cast<Eigen::Index>(m.cols()));
}

// Deterministic unit-norm start vector for the power iterations.
Eigen::VectorXd power_start(std::size_t n, std::uint64_t key) {
    RandomStream rng(key);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.next_gaussian();
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    else v.setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    return v;
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double dominant_eigenvalue(const Eigen::MatrixXd& h, std::uint64_t key) {
    if (h.rows() == 0) return 0.0;
    Eigen::VectorXd x = power_start(static_cast<std::size_t>(h.rows()), key);
    double rayleigh = 0.0;
    for (int it = 0; it < 600; ++it) {
        Eigen::VectorXd y = h.selfadjointView<Eigen::Lower>() * x;
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        const double next = x.dot(y);
        x = y / norm;
        if (it > 0 && std::abs(next - rayleigh) <=
                          1e-14 * std::max(std::abs(next), 1e-300)) {
            return next;
        }
        rayleigh = next;
    }
    return rayleigh;
}

// Largest eigenvalue of H^{-1} by inverse iteration on a ready Cholesky
// factorization. One factorization, O(d^2) per solve afterwards.
double dominant_inverse(const Eigen::LLT<Eigen::MatrixXd>& llt,
                        Eigen::Index n, std::uint64_t key) {
    Eigen::VectorXd x = power_start(static_cast<std::size_t>(n), key);
    double rayleigh = 0.0;
    for (int it = 0; it < 600; ++it) {
        Eigen::VectorXd y = llt.solve(x);
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        const double next = x.dot(y);
        x = y / norm;
        if (it > 0 && std::abs(next - rayleigh) <=
                          1e-14 * std::max(std::abs(next), 1e-300)) {
            return next;
        }
        rayleigh = next;
    }
    return rayleigh;
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionMismatchError(
            "matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
            std::to_string(b.rows()) + " differ");
    }
    DenseMatrix out(a.rows(), b.cols());
    as_eigen(out).noalias() = as_eigen(a) * as_eigen(b);
    return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    as_eigen(out) = as_eigen(a).transpose();
    return out;
}

DenseMatrix gram(const DenseMatrix& a) {
    const std::size_t d = a.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                              static_cast<Eigen::Index>(d));
    g.selfadjointView<Eigen::Upper>().rankUpdate(as_eigen(a).transpose());
    DenseMatrix out(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            const double v = g(static_cast<Eigen::Index>(i),
                               static_cast<Eigen::Index>(j));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

DenseMatrix cholesky_solve(const DenseMatrix& h, const DenseMatrix& b) {
    const std::size_t d = h.rows();
    if (h.cols() != d) {
        throw DimensionMismatchError("cholesky_solve: H is not square");
    }
    if (b.rows() != d) {
        throw DimensionMismatchError(
            "cholesky_solve: B has " + std::to_string(b.rows()) +
            " rows, expected " + std::to_string(d));
    }

    double max_diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, h(i, i));
    const double tol = 1e-12 * max_diag;

    // Lower Cholesky factor, built row by row (row-major friendly).
    DenseMatrix l(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        double diag = h(j, j);
        const double* lj = l.data() + j * d;
        for (std::size_t k = 0; k < j; ++k) diag -= lj[k] * lj[k];
        if (diag <= 0.0 || diag < tol) {
            throw NotPositiveDefiniteError(
                "cholesky_solve: pivot " + std::to_string(diag) +
                " at column " + std::to_string(j) + " below tolerance " +
                std::to_string(tol));
        }
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < d; ++i) {
            double acc = h(i, j);
            const double* li = l.data() + i * d;
            for (std::size_t k = 0; k < j; ++k) acc -= li[k] * lj[k];
            l(i, j) = acc / ljj;
        }
    }

    // Forward then backward substitution across all columns of B at once.
    DenseMatrix x = b;
    const std::size_t k = b.cols();
    for (std::size_t i = 0; i < d; ++i) {
        double* xi = x.data() + i * k;
        const double* li = l.data() + i * d;
        for (std::size_t j = 0; j < i; ++j) {
            const double lij = li[j];
            const double* xj = x.data() + j * k;
            for (std::size_t c = 0; c < k; ++c) xi[c] -= lij * xj[c];
        }
        const double inv = 1.0 / li[i];
        for (std::size_t c = 0; c < k; ++c) xi[c] *= inv;
    }
    for (std::size_t ii = d; ii-- > 0;) {
        double* xi = x.data() + ii * k;
        for (std::size_t j = ii + 1; j < d; ++j) {
            const double lji = l(j, ii);  // L^T(ii, j)
            const double* xj = x.data() + j * k;
            for (std::size_t c = 0; c < k; ++c) xi[c] -= lji * xj[c];
        }
        const double inv = 1.0 / l(ii, ii);
        for (std::size_t c = 0; c < k; ++c) xi[c] *= inv;
    }
    return x;
}

namespace {

// Shared QR plumbing: factorization plus the rank guard on diag(R).
void check_qr_rank(const Eigen::HouseholderQR<Eigen::MatrixXd>& qr,
                   std::size_t d, const char* who) {
    const auto diag = qr.matrixQR().diagonal().head(static_cast<Eigen::Index>(d));
    const double max_diag = diag.cwiseAbs().maxCoeff();
    if (max_diag == 0.0) {
        throw RankDeficientError(std::string(who) + ": R vanishes entirely");
    }
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (std::abs(diag[i]) < 1e-12 * max_diag) {
            throw RankDeficientError(
                std::string(who) + ": R diagonal entry " +
                std::to_string(std::abs(diag[i])) + " at column " +
                std::to_string(i) + " below 1e-12 of max " +
                std::to_string(max_diag));
        }
    }
}

}  // namespace

DenseMatrix qr_least_squares(const DenseMatrix& a, const DenseMatrix& b) {
    const std::size_t n = a.rows();
    const std::size_t d = a.cols();
    if (n < d) {
        throw DimensionMismatchError(
            "qr_least_squares: need at least as many rows as columns");
    }
    if (b.rows() != n) {
        throw DimensionMismatchError(
            "qr_least_squares: B has " + std::to_string(b.rows()) +
            " rows, expected " + std::to_string(n));
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(as_eigen(a));
    check_qr_rank(qr, d, "qr_least_squares");
    DenseMatrix out(d, b.cols());
    as_eigen(out) = qr.solve(as_eigen(b));
    return out;
}

DenseMatrix orthonormal_basis(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    const std::size_t d = a.cols();
    if (n < d) {
        throw DimensionMismatchError(
            "orthonormal_basis: need at least as many rows as columns");
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(as_eigen(a));
    check_qr_rank(qr, d, "orthonormal_basis");
    Eigen::MatrixXd thin_q =
        qr.householderQ() *
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                  static_cast<Eigen::Index>(d));
    // Fix the sign ambiguity of QR so the basis is deterministic.
    for (Eigen::Index j = 0; j < thin_q.cols(); ++j) {
        if (qr.matrixQR()(j, j) < 0.0) thin_q.col(j) = -thin_q.col(j);
    }
    DenseMatrix out(n, d);
    as_eigen(out) = thin_q;
    return out;
}

void fwht_inplace(std::span<double> v) {
    const std::size_t n = v.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw NotPowerOfTwoError("fwht_inplace: length " + std::to_string(n) +
                                 " is not a power of two");
    }
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double x = v[j];
                const double y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& x : v) x *= scale;
}

SymmetricEigenBounds symmetric_extreme_eigenvalues(const DenseMatrix& h) {
    if (h.rows() != h.cols()) {
        throw DimensionMismatchError(
            "symmetric_extreme_eigenvalues: matrix is not square");
    }
    const Eigen::MatrixXd hm = as_eigen(h);
    // Shift by the dominant magnitude so the top extreme comes from a plain
    // power iteration on a PSD matrix.
    const double mu = std::abs(dominant_eigenvalue(hm, 0x5EEDBA5Eull));
    if (mu == 0.0) return {0.0, 0.0};
    const Eigen::MatrixXd ident =
        Eigen::MatrixXd::Identity(hm.rows(), hm.cols());
    const double hi =
        dominant_eigenvalue(hm + mu * ident, 0xFACEFEEDull) - mu;

    // The bottom extreme comes from inverse iteration: on a positive
    // definite H the smallest eigenvalue maps to the dominant one of H^{-1},
    // where the power method converges at the fast ratio lambda_min /
    // lambda_2 instead of the near-1 ratio a subtractive shift would give.
    // Indefinite input falls back to an escalating positive shift until the
    // factorization succeeds.
    double shift = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(hm);
    double jitter = mu * 1e-14;
    while (llt.info() != Eigen::Success) {
        shift = mu + jitter;
        llt.compute(hm + shift * ident);
        jitter *= 1024.0;
    }
    const double inv_dom = dominant_inverse(llt, hm.rows(), 0xBEEFCAFEull);
    const double lo =
        (inv_dom == 0.0 ? 0.0 : 1.0 / inv_dom) - shift;
    return {lo, hi};
}

double spectral_radius_estimate(const DenseMatrix& a, int max_iters,
                                double rel_tol) {
    if (a.rows() != a.cols()) {
        throw DimensionMismatchError(
            "spectral_radius_estimate: matrix is not square");
    }
    if (a.rows() == 0) return 0.0;
    const auto am = as_eigen(a);
    Eigen::VectorXd x = power_start(a.rows(), 0x51DECA11ull);
    double estimate = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd y = am * x;
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        if (it > 0 && std::abs(norm - estimate) <= rel_tol * norm) {
            return norm;
        }
        estimate = norm;
        x = y / norm;
    }
    return estimate;
}

}  // namespace sketchid
