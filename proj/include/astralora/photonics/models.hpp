#ifndef ASTRALORA_PHOTONICS_MODELS_HPP
#define ASTRALORA_PHOTONICS_MODELS_HPP

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "astralora/numlin/matrix.hpp"

namespace astralora::photonics {

using numlin::CMatrix;
using numlin::Matrix;

/// Normalized transmission of an all-pass micro-ring resonator driven by a
/// phase w, mapped to [-1, 1]: 2*sqrt(T(w)) - 1 with
/// T = (a^2 + r^2 - 2 a r cos w) / (1 + (a r)^2 - 2 a r cos w).
double mrr_response(double w, double a = 0.8, double r = 0.9);

/// Phase-mask matrix A_ij = cos(w_ij) / sqrt(d_inp), row-major w.
Matrix slm_matrix(std::span<const double> w, std::size_t d_out, std::size_t d_inp);

/// Two-factor (Monarch) structured product. Input and output dimensions are
/// split into two power-of-two factors b * n, with b the smaller one; the
/// right stage applies n_r_out independent b_r_out x b_r_inp phase blocks,
/// a fixed transpose-style permutation rewires the intermediate, and the
/// left stage applies n_l_out blocks of shape b_l_out x b_l_inp.
struct MonarchShape {
    std::size_t d_inp = 0, d_out = 0;
    std::size_t b_inp = 0, n_inp = 0; // d_inp = b_inp * n_inp, b_inp <= n_inp
    std::size_t b_out = 0, n_out = 0; // d_out = b_out * n_out, b_out <= n_out

    // Right stage: n_inp blocks, each n_out x b_inp.
    // Left stage: n_out blocks, each b_out x n_inp.
    static MonarchShape from_dims(std::size_t d_inp, std::size_t d_out);
    std::size_t right_params() const { return n_inp * n_out * b_inp; }
    std::size_t left_params() const { return n_out * b_out * n_inp; }
    std::size_t param_count() const { return right_params() + left_params(); }
};

/// True when n is a power of two (n >= 1).
bool is_pow2(std::size_t n);

/// Effective real matrix of the Monarch product for parameters w
/// (all right-stage phases first, then left-stage phases, block-major).
Matrix monarch_matrix(const MonarchShape& shape, std::span<const double> w);

enum class MeshCell { mzi, mzi3 };

/// 2x2 transfer matrix of one programmable interferometer cell.
/// mzi:  e^{i theta/2} [[e^{i phi} sin(theta/2), cos(theta/2)],
///                      [e^{i phi} cos(theta/2), -sin(theta/2)]]
/// mzi3: redundant-phase three-splitter variant, prefactor
///       e^{i (phi+theta)/2} / sqrt(2); see the implementation for the
///       exact entries.
CMatrix mesh_cell(MeshCell kind, double theta, double phi);

/// Rectangular (Clements) layout on n modes: n layers of nearest-neighbour
/// cells, even layers coupling (0,1),(2,3),..., odd layers (1,2),(3,4),...,
/// n(n-1)/2 cells in total, plus one output phase per mode.
struct MeshLayout {
    std::size_t n_modes = 0;
    // (layer, top mode) per cell, layer-major then top-to-bottom.
    std::vector<std::pair<std::size_t, std::size_t>> cells;

    static MeshLayout clements(std::size_t n_modes);
    std::size_t cell_count() const { return cells.size(); }
    // 2 angles per cell + n output phases = n^2
    std::size_t param_count() const { return 2 * cell_count() + n_modes; }
};

/// Applies the mesh with parameters w = [theta_0, phi_0, ..., out_phases]
/// to complex mode amplitudes in place.
void mesh_apply(const MeshLayout& layout, MeshCell kind, std::span<const double> w,
                std::span<std::complex<double>> amps);

/// Full n x n complex transfer matrix (columns = responses to basis inputs).
CMatrix mesh_matrix(const MeshLayout& layout, MeshCell kind, std::span<const double> w);

} // namespace astralora::photonics

#endif
