#ifndef ASTRALORA_PHOTONICS_BLACK_BOX_HPP
#define ASTRALORA_PHOTONICS_BLACK_BOX_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "astralora/numlin/matrix.hpp"
#include "astralora/numlin/rng.hpp"

namespace astralora::photonics {

using numlin::Matrix;
using numlin::RngStream;

enum class LayerKind { matvec, mrr, slm, monarch, mzi, mzi3 };

LayerKind layer_kind_from_string(const std::string& s);
std::string to_string(LayerKind kind);

struct BlackBoxConfig {
    LayerKind kind = LayerKind::matvec;
    std::size_t d_inp = 0;
    std::size_t d_out = 0;
    double mrr_a = 0.8; // ring amplitude transmission
    double mrr_r = 0.9; // coupler reflectivity
};

/// Opaque linear map y = f[w](x). Gradients of f with respect to w are never
/// exposed; the only way to learn about the map is to query it, and every
/// query is counted. Parameter loads (set_params / the w argument of
/// forward_with) are free, queries are not.
class BlackBoxLayer {
public:
    virtual ~BlackBoxLayer() = default;

    LayerKind kind() const { return kind_; }
    std::size_t d_inp() const { return d_inp_; }
    std::size_t d_out() const { return d_out_; }
    std::size_t d_bb() const { return params_.size(); }

    const std::vector<double>& params() const { return params_; }
    void set_params(std::span<const double> w);

    std::vector<double> forward(std::span<const double> x);
    std::vector<double> forward_with(std::span<const double> w, std::span<const double> x);

    /// One query per row of xs. The parameter-to-transform map is evaluated
    /// once per call, which reflects hardware where reloading w is the
    /// expensive part and pushing another input frame is cheap.
    Matrix forward_batch(const Matrix& xs);
    Matrix forward_with_batch(std::span<const double> w, const Matrix& xs);

    std::uint64_t query_count() const { return queries_.load(std::memory_order_relaxed); }

    /// Hard cap on total queries; 0 disables the cap. Exceeding it throws
    /// BudgetError before the offending queries are issued.
    void set_query_limit(std::uint64_t limit) { query_limit_ = limit; }
    std::uint64_t query_limit() const { return query_limit_; }

protected:
    BlackBoxLayer(LayerKind kind, std::size_t d_inp, std::size_t d_out, std::size_t d_bb);

    /// ys(i, :) = f[w](xs(i, :)); pure, no counting.
    virtual void apply(std::span<const double> w, const Matrix& xs, Matrix& ys) const = 0;

private:
    void charge(std::uint64_t n);

    LayerKind kind_;
    std::size_t d_inp_;
    std::size_t d_out_;
    std::vector<double> params_;
    std::atomic<std::uint64_t> queries_{0};
    std::uint64_t query_limit_ = 0;
};

std::unique_ptr<BlackBoxLayer> make_black_box(const BlackBoxConfig& cfg);

/// Kind-appropriate random parameter draw: N(0, 1/d_inp) entries for matvec,
/// phases uniform on [0, 2*pi) for everything else.
std::vector<double> random_params(const BlackBoxLayer& layer, RngStream& stream);

/// Effective d_out x d_inp matrix recovered column-by-column from basis
/// queries at the layer's current parameters. Costs d_inp queries; refused
/// above the size guard since the cost would dwarf any training run.
Matrix materialize(BlackBoxLayer& layer);

/// Same, at explicit parameters w (the layer's own parameters are untouched).
Matrix materialize_at(BlackBoxLayer& layer, std::span<const double> w);

inline constexpr std::size_t kMaterializeGuard = 4096;

} // namespace astralora::photonics

#endif
