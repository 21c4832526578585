#pragma once

#include <span>

#include "sketchid/dense_matrix.hpp"

namespace sketchid {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

/// A^T A. The upper triangle is computed and mirrored onto the lower one,
/// so the result is exactly symmetric entry for entry.
DenseMatrix gram(const DenseMatrix& a);

/// Solves H X = B for symmetric positive definite H via Cholesky.
/// H is factored once and the factor is reused for every column of B.
/// Throws NotPositiveDefiniteError when a pivot falls below
/// 1e-12 * max(diag(H)).
DenseMatrix cholesky_solve(const DenseMatrix& h, const DenseMatrix& b);

/// argmin_X ||A X - B||_F via thin Householder QR (A is N x d, N >= d).
/// Throws RankDeficientError when |R(i,i)| < 1e-12 * max_j |R(j,j)|.
DenseMatrix qr_least_squares(const DenseMatrix& a, const DenseMatrix& b);

/// Thin orthonormal basis for range(A) from Householder QR, with column
/// signs chosen so the corresponding R diagonal is positive.
DenseMatrix orthonormal_basis(const DenseMatrix& a);

/// In-place orthonormal Walsh-Hadamard transform. Length must be a power
/// of two; the transform is symmetric and involutive (applying it twice
/// restores the input) and preserves the Euclidean norm.
void fwht_inplace(std::span<double> v);

struct SymmetricEigenBounds {
    double min_eig;
    double max_eig;
};

/// Extreme eigenvalues of a symmetric matrix: the largest by a shifted
/// power iteration, the smallest by inverse iteration through a Cholesky
/// factorization (indefinite input is shifted positive first). Start
/// vectors are deterministic, so repeated calls agree bitwise.
SymmetricEigenBounds symmetric_extreme_eigenvalues(const DenseMatrix& h);

/// Dominant-eigenvalue magnitude of a square matrix by power iteration.
double spectral_radius_estimate(const DenseMatrix& a, int max_iters = 200,
                                double rel_tol = 1e-8);

}  // namespace sketchid
