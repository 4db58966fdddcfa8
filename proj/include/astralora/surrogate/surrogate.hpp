#ifndef ASTRALORA_SURROGATE_SURROGATE_HPP
#define ASTRALORA_SURROGATE_SURROGATE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "astralora/numlin/decomp.hpp"
#include "astralora/numlin/matrix.hpp"
#include "astralora/numlin/rng.hpp"
#include "astralora/photonics/black_box.hpp"

namespace astralora::surrogate {

using numlin::Matrix;
using numlin::RngStream;
using photonics::BlackBoxLayer;

/// Rank-r factored stand-in U * S * V^T for the black box's effective matrix.
/// U (d_out x r) and V (d_inp x r) keep orthonormal columns across updates;
/// S (r x r) is small and dense.
struct SurrogateModel {
    Matrix u, s, v;

    std::size_t rank() const { return s.rows(); }
    std::size_t d_out() const { return u.rows(); }
    std::size_t d_inp() const { return v.rows(); }

    std::vector<double> forward(std::span<const double> x) const;        // U S V^T x
    std::vector<double> backward_input(std::span<const double> g) const; // V S^T U^T g

    Matrix dense() const; // U S V^T, for diagnostics and tests

    /// max(||U^T U - I||_F, ||V^T V - I||_F)
    double orth_drift() const;
};

/// How the transpose sketch (Delta A)^T U is obtained.
///   stochastic: Gaussian probing with paired queries, the production path;
///   exact: materializes the map at both parameter sets (diagnostics only,
///          query cost d_inp per materialization).
enum class TransposeMode { stochastic, exact };

/// Builds the surrogate by materializing the map and truncating its SVD.
/// Costs d_inp queries; exact start-of-training reference.
SurrogateModel init_oracle(BlackBoxLayer& layer, std::size_t rank);

/// Builds the surrogate from a randomized range sketch: Y = A * Omega with
/// r + oversample Gaussian columns gives Q = orth(Y); the core is estimated
/// from m_probe antithetic probe pairs of A^T Q. Costs
/// (rank + oversample) + 2 * m_probe queries. With TransposeMode::exact the
/// probing is replaced by materialization (test path).
SurrogateModel init_sketch(BlackBoxLayer& layer, std::size_t rank, std::size_t oversample,
                           std::size_t m_probe, RngStream& stream,
                           TransposeMode mode = TransposeMode::stochastic);

/// Monte-Carlo estimate of (A(w1) - A(w0))^T * u from m_probe Gaussian probes
/// z_j: mean of z_j * ((f[w1](z_j) - f[w0](z_j))^T u). Unbiased; the expected
/// squared error per column scales like (d_inp + 1) / m_probe times the true
/// column norm squared. Costs 2 * m_probe queries.
Matrix transpose_probe(BlackBoxLayer& layer, std::span<const double> w0,
                       std::span<const double> w1, const Matrix& u, std::size_t m_probe,
                       RngStream& stream, TransposeMode mode = TransposeMode::stochastic);

struct PsiBudget {
    std::size_t m_sm = 0;          // probe pairs used for the transpose sketch
    std::uint64_t queries_spent = 0;
};

/// One projector-splitting step tracking the parameter move w0 -> w1:
///   K = U S + P1,          P1 = (A1 - A0) V      (r paired queries)
///   U', St = qr(K);        Sh = St - U'^T P1
///   L = V Sh^T + P2,       P2 ~ (A1 - A0)^T U'   (m_sm paired queries)
///   V', S'^T = qr(L)
/// Returns the updated factors; the input model and the layer parameters are
/// left untouched. Cost: 2 * rank + 2 * m_sm queries.
SurrogateModel ipsi_update(const SurrogateModel& sm, BlackBoxLayer& layer,
                           std::span<const double> w0, std::span<const double> w1,
                           std::size_t m_sm, RngStream& stream,
                           TransposeMode mode = TransposeMode::stochastic,
                           PsiBudget* budget = nullptr);

/// Relative error ||A - U S V^T||_F / ||A||_F against the materialized map at
/// the layer's current parameters. Diagnostic; costs d_inp queries.
double sm_rel_error(BlackBoxLayer& layer, const SurrogateModel& sm);

} // namespace astralora::surrogate

#endif
