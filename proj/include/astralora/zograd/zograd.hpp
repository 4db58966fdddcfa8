#ifndef ASTRALORA_ZOGRAD_ZOGRAD_HPP
#define ASTRALORA_ZOGRAD_ZOGRAD_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "astralora/numlin/matrix.hpp"
#include "astralora/numlin/rng.hpp"
#include "astralora/photonics/black_box.hpp"

namespace astralora::zograd {

using numlin::Matrix;
using numlin::RngStream;
using photonics::BlackBoxLayer;

struct ZoConfig {
    double mu = 1e-2;       // smoothing radius, > 0
    std::size_t m_bb = 1;   // probe directions per estimate, >= 1
    bool share_directions = true; // one direction set for the whole batch
};

struct ZoEstimate {
    std::vector<double> g;  // d_bb entries
    std::uint64_t queries_used = 0;
    std::size_t samples = 0;
};

/// Forward-difference Gaussian gradient estimate of the scalar objective
/// h(w) = <f[w](x), v> at w:
///   g = (1 / (mu * m_bb)) * sum_i (<f[w + mu u_i](x) - f[w](x), v>) u_i,
/// u_i ~ N(0, I). The base query f[w](x) is issued once and reused, so the
/// cost is m_bb + 1 queries.
ZoEstimate estimate_gradient(BlackBoxLayer& layer, std::span<const double> w,
                             std::span<const double> x, std::span<const double> v,
                             const ZoConfig& cfg, RngStream& stream);

/// Batch version: rows of xs are inputs, rows of vs the matching error
/// vectors; returns the mean of the per-sample estimates. With shared
/// directions each perturbed parameter set is loaded once and queried for
/// the whole batch; otherwise every sample draws fresh directions. Either
/// way the cost is rows * (m_bb + 1) queries.
ZoEstimate estimate_batch(BlackBoxLayer& layer, std::span<const double> w,
                          const Matrix& xs, const Matrix& vs, const ZoConfig& cfg,
                          RngStream& stream);

} // namespace astralora::zograd

#endif
