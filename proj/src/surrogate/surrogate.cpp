#include "astralora/surrogate/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace astralora::surrogate {

using numlin::matmul;
using numlin::matmul_nt;
using numlin::matmul_tn;
using numlin::qr_thin;
using numlin::sub;
using numlin::svd_trunc;
using numlin::transpose;

std::vector<double> SurrogateModel::forward(std::span<const double> x) const {
    require(x.size() == d_inp(), "surrogate forward: dimension mismatch");
    const std::size_t r = rank();
    std::vector<double> t(r, 0.0), t2(r, 0.0), y(d_out(), 0.0);
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < r; ++j) t[j] += v(i, j) * x[i];
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) t2[i] += s(i, j) * t[j];
    for (std::size_t i = 0; i < u.rows(); ++i)
        for (std::size_t j = 0; j < r; ++j) y[i] += u(i, j) * t2[j];
    return y;
}

std::vector<double> SurrogateModel::backward_input(std::span<const double> g) const {
    require(g.size() == d_out(), "surrogate backward: dimension mismatch");
    const std::size_t r = rank();
    std::vector<double> t(r, 0.0), t2(r, 0.0), x(d_inp(), 0.0);
    for (std::size_t i = 0; i < u.rows(); ++i)
        for (std::size_t j = 0; j < r; ++j) t[j] += u(i, j) * g[i];
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) t2[i] += s(j, i) * t[j];
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < r; ++j) x[i] += v(i, j) * t2[j];
    return x;
}

Matrix SurrogateModel::dense() const { return matmul_nt(matmul(u, s), v); }

double SurrogateModel::orth_drift() const {
    auto drift = [](const Matrix& m) {
        Matrix g = matmul_tn(m, m);
        for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
        return numlin::frob_norm(g);
    };
    return std::max(drift(u), drift(v));
}

namespace {

Matrix diag_matrix(const std::vector<double>& s) {
    Matrix m(s.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) m(i, i) = s[i];
    return m;
}

void check_rank(const BlackBoxLayer& layer, std::size_t rank) {
    require(rank >= 1, "surrogate rank must be at least 1");
    require(rank <= std::min(layer.d_inp(), layer.d_out()),
            "surrogate rank exceeds min(d_inp, d_out)");
}

} // namespace

SurrogateModel init_oracle(BlackBoxLayer& layer, std::size_t rank) {
    check_rank(layer, rank);
    const Matrix a = photonics::materialize(layer);
    auto svd = svd_trunc(a, rank);
    return {std::move(svd.u), diag_matrix(svd.s), std::move(svd.v)};
}

SurrogateModel init_sketch(BlackBoxLayer& layer, std::size_t rank, std::size_t oversample,
                           std::size_t m_probe, RngStream& stream, TransposeMode mode) {
    check_rank(layer, rank);
    const std::size_t k = std::min(rank + oversample, std::min(layer.d_inp(), layer.d_out()));

    Matrix omega(k, layer.d_inp()); // rows are sketch directions
    stream.fill_normal(omega.storage());
    const Matrix y = layer.forward_batch(omega); // k queries
    const Matrix q = qr_thin(transpose(y)).q;    // d_out x k

    Matrix b; // A^T Q, d_inp x k
    if (mode == TransposeMode::exact) {
        b = matmul_tn(photonics::materialize(layer), q);
    } else {
        require(m_probe >= 1, "init_sketch: m_probe must be positive");
        Matrix z(m_probe, layer.d_inp());
        stream.fill_normal(z.storage());
        const Matrix y_pos = layer.forward_batch(z);
        const Matrix y_neg = layer.forward_batch(numlin::scale(z, -1.0));
        // antithetic pair isolates the odd (linear) component of the readout
        const Matrix d = numlin::scale(sub(y_pos, y_neg), 0.5);
        const Matrix c = matmul(d, q); // m x k
        b = numlin::scale(matmul_tn(z, c), 1.0 / static_cast<double>(m_probe));
    }

    auto svd = svd_trunc(b, rank); // B = Vb S Wb^T, A ~ Q Wb S Vb^T
    return {matmul(q, svd.v), diag_matrix(svd.s), std::move(svd.u)};
}

Matrix transpose_probe(BlackBoxLayer& layer, std::span<const double> w0,
                       std::span<const double> w1, const Matrix& u, std::size_t m_probe,
                       RngStream& stream, TransposeMode mode) {
    require(u.rows() == layer.d_out(), "transpose_probe: U row count mismatch");
    if (mode == TransposeMode::exact) {
        const Matrix a1 = photonics::materialize_at(layer, w1);
        const Matrix a0 = photonics::materialize_at(layer, w0);
        return matmul_tn(sub(a1, a0), u);
    }
    require(m_probe >= 1, "transpose_probe: m_probe must be positive");
    Matrix z(m_probe, layer.d_inp());
    stream.fill_normal(z.storage());
    const Matrix y1 = layer.forward_with_batch(w1, z);
    const Matrix y0 = layer.forward_with_batch(w0, z);
    const Matrix c = matmul(sub(y1, y0), u); // m x r
    return numlin::scale(matmul_tn(z, c), 1.0 / static_cast<double>(m_probe));
}

SurrogateModel ipsi_update(const SurrogateModel& sm, BlackBoxLayer& layer,
                           std::span<const double> w0, std::span<const double> w1,
                           std::size_t m_sm, RngStream& stream, TransposeMode mode,
                           PsiBudget* budget) {
    require(sm.d_inp() == layer.d_inp() && sm.d_out() == layer.d_out(),
            "ipsi_update: surrogate/layer shape mismatch");
    require(m_sm >= 1, "ipsi_update: m_sm must be positive");
    const std::uint64_t q_start = layer.query_count();

    // P1 = (A(w1) - A(w0)) V from one paired query per column of V
    const Matrix vt = transpose(sm.v); // r x d_inp, rows are probe inputs
    const Matrix y1 = layer.forward_with_batch(w1, vt);
    const Matrix y0 = layer.forward_with_batch(w0, vt);
    const Matrix p1 = transpose(sub(y1, y0)); // d_out x r

    const Matrix k = numlin::add(matmul(sm.u, sm.s), p1);
    auto qr_k = qr_thin(k);
    Matrix& u1 = qr_k.q;
    const Matrix sh = sub(qr_k.r, matmul_tn(u1, p1));

    const Matrix p2 = transpose_probe(layer, w0, w1, u1, m_sm, stream, mode);
    const Matrix l = numlin::add(matmul_nt(sm.v, sh), p2);
    auto qr_l = qr_thin(l);

    if (budget) {
        budget->m_sm = m_sm;
        budget->queries_spent = layer.query_count() - q_start;
    }
    return {std::move(u1), transpose(qr_l.r), std::move(qr_l.q)};
}

double sm_rel_error(BlackBoxLayer& layer, const SurrogateModel& sm) {
    const Matrix a = photonics::materialize(layer);
    const double fn = numlin::frob_norm(a);
    const double err = numlin::frob_norm(sub(a, sm.dense()));
    if (fn == 0.0) return err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return err / fn;
}

} // namespace astralora::surrogate
