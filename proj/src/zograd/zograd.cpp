#include "astralora/zograd/zograd.hpp"

#include "astralora/errors.hpp"

namespace astralora::zograd {

namespace {

void check_args(const BlackBoxLayer& layer, std::span<const double> w, const Matrix& xs,
                const Matrix& vs, const ZoConfig& cfg) {
    require(cfg.mu > 0.0, "zo: mu must be positive");
    require(cfg.m_bb >= 1, "zo: m_bb must be at least 1");
    require(w.size() == layer.d_bb(), "zo: parameter count mismatch");
    require(xs.cols() == layer.d_inp(), "zo: input dimension mismatch");
    require(vs.cols() == layer.d_out(), "zo: error dimension mismatch");
    require(xs.rows() == vs.rows() && xs.rows() >= 1, "zo: batch size mismatch");
    require(numlin::all_finite(w), "zo: non-finite parameters");
}

} // namespace

ZoEstimate estimate_batch(BlackBoxLayer& layer, std::span<const double> w,
                          const Matrix& xs, const Matrix& vs, const ZoConfig& cfg,
                          RngStream& stream) {
    check_args(layer, w, xs, vs, cfg);
    const std::size_t b = xs.rows();
    const std::size_t d = layer.d_bb();
    const std::uint64_t q_start = layer.query_count();

    // base readings at the unperturbed parameters, one query per sample
    const Matrix base = layer.forward_with_batch(w, xs);
    std::vector<double> base_dot(b);
    for (std::size_t s = 0; s < b; ++s) base_dot[s] = numlin::dot(base.row(s), vs.row(s));

    ZoEstimate est;
    est.g.assign(d, 0.0);
    est.samples = b;
    std::vector<double> u(d), wp(d);
    const double norm = 1.0 / (cfg.mu * static_cast<double>(cfg.m_bb) * static_cast<double>(b));

    if (cfg.share_directions || b == 1) {
        for (std::size_t i = 0; i < cfg.m_bb; ++i) {
            stream.fill_normal(u);
            for (std::size_t j = 0; j < d; ++j) wp[j] = w[j] + cfg.mu * u[j];
            const Matrix ys = layer.forward_with_batch(wp, xs);
            double coef = 0.0;
            for (std::size_t s = 0; s < b; ++s)
                coef += numlin::dot(ys.row(s), vs.row(s)) - base_dot[s];
            numlin::axpy(coef * norm, u, est.g);
        }
    } else {
        Matrix xrow(1, xs.cols());
        for (std::size_t s = 0; s < b; ++s) {
            xrow.set_row(0, xs.row(s));
            for (std::size_t i = 0; i < cfg.m_bb; ++i) {
                stream.fill_normal(u);
                for (std::size_t j = 0; j < d; ++j) wp[j] = w[j] + cfg.mu * u[j];
                const Matrix ys = layer.forward_with_batch(wp, xrow);
                const double coef = numlin::dot(ys.row(0), vs.row(s)) - base_dot[s];
                numlin::axpy(coef * norm, u, est.g);
            }
        }
    }
    est.queries_used = layer.query_count() - q_start;
    return est;
}

ZoEstimate estimate_gradient(BlackBoxLayer& layer, std::span<const double> w,
                             std::span<const double> x, std::span<const double> v,
                             const ZoConfig& cfg, RngStream& stream) {
    Matrix xs(1, x.size());
    xs.set_row(0, x);
    Matrix vs(1, v.size());
    vs.set_row(0, v);
    return estimate_batch(layer, w, xs, vs, cfg, stream);
}

} // namespace astralora::zograd
