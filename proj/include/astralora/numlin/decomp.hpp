#ifndef ASTRALORA_NUMLIN_DECOMP_HPP
#define ASTRALORA_NUMLIN_DECOMP_HPP

#include <vector>

#include "astralora/numlin/matrix.hpp"

namespace astralora::numlin {

struct QrResult {
    Matrix q; // n x k, orthonormal columns
    Matrix r; // k x k, upper triangular, non-negative diagonal
};

/// Thin QR of an n x k matrix with n >= k, via Householder reflections.
/// The diagonal of R is normalized to be non-negative, which makes the
/// factorization unique for full-rank input and bit-reproducible across runs.
QrResult qr_thin(const Matrix& a);

struct SvdResult {
    Matrix u;              // n x r, orthonormal columns
    std::vector<double> s; // r singular values, non-increasing, >= 0
    Matrix v;              // k x r, orthonormal columns
};

/// Rank-r truncated SVD via one-sided Jacobi. Exact (to round-off) rather
/// than randomized; intended for the moderate sizes used here. When r exceeds
/// the numerical rank the trailing singular values are zero and the
/// corresponding columns are completed to an orthonormal set.
SvdResult svd_trunc(const Matrix& a, std::size_t r);

/// Largest singular value (convenience wrapper around svd_trunc).
double spectral_norm(const Matrix& a);

} // namespace astralora::numlin

#endif
