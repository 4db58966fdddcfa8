#include "astralora/numlin/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace astralora::numlin {

namespace {

// Applies H = I - tau*v*v^T (v implicit: v[j]=1, v[i]=a(i,col) for i>j) to
// columns [from, to) of m, rows j..n-1.
void apply_reflector(const Matrix& house, std::size_t j, double tau, Matrix& m,
                     std::size_t from, std::size_t to) {
    if (tau == 0.0) return;
    const std::size_t n = m.rows();
    for (std::size_t c = from; c < to; ++c) {
        double w = m(j, c);
        for (std::size_t i = j + 1; i < n; ++i) w += house(i, j) * m(i, c);
        w *= tau;
        m(j, c) -= w;
        for (std::size_t i = j + 1; i < n; ++i) m(i, c) -= w * house(i, j);
    }
}

} // namespace

QrResult qr_thin(const Matrix& a) {
    const std::size_t n = a.rows();
    const std::size_t k = a.cols();
    require(n >= k && k > 0, "qr_thin: need rows >= cols >= 1");
    require(all_finite(a), "qr_thin: non-finite input");

    Matrix work = a;
    std::vector<double> tau(k, 0.0);

    for (std::size_t j = 0; j < k; ++j) {
        const double alpha = work(j, j);
        double xnorm = 0.0;
        for (std::size_t i = j + 1; i < n; ++i) xnorm += work(i, j) * work(i, j);
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0.0) {
            tau[j] = 0.0;
            continue;
        }
        const double norm = std::hypot(alpha, xnorm);
        const double beta = (alpha >= 0.0) ? -norm : norm;
        tau[j] = (beta - alpha) / beta;
        const double inv = 1.0 / (alpha - beta);
        for (std::size_t i = j + 1; i < n; ++i) work(i, j) *= inv;
        work(j, j) = beta;
        apply_reflector(work, j, tau[j], work, j + 1, k);
    }

    Matrix r(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) r(i, j) = work(i, j);

    Matrix q(n, k);
    for (std::size_t j = 0; j < k; ++j) q(j, j) = 1.0;
    for (std::size_t j = k; j-- > 0;) apply_reflector(work, j, tau[j], q, 0, k);

    // Fix signs so diag(R) >= 0; the factorization becomes unique.
    for (std::size_t j = 0; j < k; ++j) {
        if (r(j, j) >= 0.0) continue;
        for (std::size_t c = j; c < k; ++c) r(j, c) = -r(j, c);
        for (std::size_t i = 0; i < n; ++i) q(i, j) = -q(i, j);
    }
    return {std::move(q), std::move(r)};
}

namespace {

// One-sided Jacobi: returns B with orthogonal columns and the accumulated
// right rotations V such that input = B * V^T.
void jacobi_orthogonalize(Matrix& b, Matrix& v) {
    const std::size_t k = b.cols();
    constexpr double kEps = 1e-15;
    constexpr int kMaxSweeps = 60;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) {
                const auto bp = b.col(p);
                const auto bq = b.col(q);
                const double app = dot(bp, bp);
                const double aqq = dot(bq, bq);
                const double apq = dot(bp, bq);
                if (app == 0.0 || aqq == 0.0) continue;
                if (std::abs(apq) <= kEps * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t =
                    (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < b.rows(); ++i) {
                    const double xp = b(i, p), xq = b(i, q);
                    b(i, p) = c * xp - s * xq;
                    b(i, q) = s * xp + c * xq;
                }
                for (std::size_t i = 0; i < v.rows(); ++i) {
                    const double xp = v(i, p), xq = v(i, q);
                    v(i, p) = c * xp - s * xq;
                    v(i, q) = s * xp + c * xq;
                }
            }
        }
        if (!rotated) break;
    }
}

// Deterministically extends the first `have` orthonormal columns of u to
// `want` columns, drawing candidates from the standard basis.
void complete_orthonormal(Matrix& u, std::size_t have, std::size_t want) {
    const std::size_t n = u.rows();
    std::size_t next_axis = 0;
    for (std::size_t j = have; j < want; ++j) {
        std::vector<double> cand(n, 0.0);
        bool found = false;
        while (next_axis < n && !found) {
            std::fill(cand.begin(), cand.end(), 0.0);
            cand[next_axis] = 1.0;
            ++next_axis;
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t c = 0; c < j; ++c) {
                    const double proj = dot(u.col(c), cand);
                    for (std::size_t i = 0; i < n; ++i) cand[i] -= proj * u(i, c);
                }
            const double nrm = nrm2(cand);
            if (nrm > 0.5) {
                for (double& x : cand) x /= nrm;
                found = true;
            }
        }
        require(found, "complete_orthonormal: basis exhausted");
        u.set_col(j, cand);
    }
}

} // namespace

SvdResult svd_trunc(const Matrix& a, std::size_t r) {
    const std::size_t n = a.rows();
    const std::size_t k = a.cols();
    require(n > 0 && k > 0, "svd_trunc: empty matrix");
    require(r >= 1 && r <= std::min(n, k), "svd_trunc: rank out of range");
    require(all_finite(a), "svd_trunc: non-finite input");

    if (n < k) {
        // A = (A^T)^T: swap the roles of the two factor bases.
        SvdResult t = svd_trunc(transpose(a), r);
        return {std::move(t.v), std::move(t.s), std::move(t.u)};
    }

    Matrix b = a;
    Matrix v = Matrix::identity(k);
    jacobi_orthogonalize(b, v);

    std::vector<double> sigma(k);
    for (std::size_t j = 0; j < k; ++j) sigma[j] = nrm2(b.col(j));
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    const double smax = sigma[order[0]];
    const double tol = 1e-13 * smax;

    SvdResult out;
    out.u = Matrix(n, r);
    out.v = Matrix(k, r);
    out.s.assign(r, 0.0);
    std::size_t kept = 0;
    for (std::size_t j = 0; j < r; ++j) {
        const std::size_t src = order[j];
        out.v.set_col(j, v.col(src));
        if (sigma[src] > tol && smax > 0.0) {
            out.s[j] = sigma[src];
            auto col = b.col(src);
            for (double& x : col) x /= sigma[src];
            out.u.set_col(j, col);
            kept = j + 1;
        }
    }
    if (kept < r) complete_orthonormal(out.u, kept, r);
    return out;
}

double spectral_norm(const Matrix& a) { return svd_trunc(a, 1).s[0]; }

} // namespace astralora::numlin
