#include "astralora/photonics/black_box.hpp"

#include <cmath>

#include "astralora/photonics/models.hpp"

namespace astralora::photonics {

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "matvec") return LayerKind::matvec;
    if (s == "mrr") return LayerKind::mrr;
    if (s == "slm") return LayerKind::slm;
    if (s == "monarch") return LayerKind::monarch;
    if (s == "mzi") return LayerKind::mzi;
    if (s == "mzi3" || s == "3-mzi") return LayerKind::mzi3;
    throw std::invalid_argument("unknown layer kind: " + s);
}

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::matvec: return "matvec";
        case LayerKind::mrr: return "mrr";
        case LayerKind::slm: return "slm";
        case LayerKind::monarch: return "monarch";
        case LayerKind::mzi: return "mzi";
        case LayerKind::mzi3: return "mzi3";
    }
    return "?";
}

BlackBoxLayer::BlackBoxLayer(LayerKind kind, std::size_t d_inp, std::size_t d_out,
                             std::size_t d_bb)
    : kind_(kind), d_inp_(d_inp), d_out_(d_out), params_(d_bb, 0.0) {
    require(d_inp >= 1 && d_out >= 1 && d_bb >= 1, "black box: empty dimensions");
}

void BlackBoxLayer::set_params(std::span<const double> w) {
    require(w.size() == params_.size(), "set_params: parameter count mismatch");
    require(numlin::all_finite(w), "set_params: non-finite parameters");
    params_.assign(w.begin(), w.end());
}

void BlackBoxLayer::charge(std::uint64_t n) {
    if (query_limit_ > 0 && queries_.load(std::memory_order_relaxed) + n > query_limit_)
        throw BudgetError("query budget exhausted (" + std::to_string(query_limit_) +
                          " allowed)");
    queries_.fetch_add(n, std::memory_order_relaxed);
}

std::vector<double> BlackBoxLayer::forward(std::span<const double> x) {
    return forward_with(params_, x);
}

std::vector<double> BlackBoxLayer::forward_with(std::span<const double> w,
                                                std::span<const double> x) {
    require(w.size() == params_.size(), "forward_with: parameter count mismatch");
    require(x.size() == d_inp_, "forward_with: input dimension mismatch");
    charge(1);
    Matrix xs(1, d_inp_);
    xs.set_row(0, x);
    Matrix ys(1, d_out_);
    apply(w, xs, ys);
    auto row = ys.row(0);
    return {row.begin(), row.end()};
}

Matrix BlackBoxLayer::forward_batch(const Matrix& xs) {
    return forward_with_batch(params_, xs);
}

Matrix BlackBoxLayer::forward_with_batch(std::span<const double> w, const Matrix& xs) {
    require(w.size() == params_.size(), "forward_with_batch: parameter count mismatch");
    require(xs.cols() == d_inp_, "forward_with_batch: input dimension mismatch");
    charge(xs.rows());
    Matrix ys(xs.rows(), d_out_);
    apply(w, xs, ys);
    return ys;
}

namespace {

class MatvecLayer final : public BlackBoxLayer {
public:
    MatvecLayer(std::size_t d_inp, std::size_t d_out)
        : BlackBoxLayer(LayerKind::matvec, d_inp, d_out, d_inp * d_out) {}

protected:
    void apply(std::span<const double> w, const Matrix& xs, Matrix& ys) const override {
        for (std::size_t i = 0; i < xs.rows(); ++i) {
            const double* x = xs.data() + i * d_inp();
            for (std::size_t j = 0; j < d_out(); ++j) {
                const double* aj = w.data() + j * d_inp();
                double s = 0.0;
                for (std::size_t k = 0; k < d_inp(); ++k) s += aj[k] * x[k];
                ys(i, j) = s;
            }
        }
    }
};

// Entrywise parameter-to-weight maps (mrr, slm) share the batch kernel.
class EntrywiseLayer : public BlackBoxLayer {
public:
    using BlackBoxLayer::BlackBoxLayer;

protected:
    virtual double weight(double w) const = 0;

    void apply(std::span<const double> w, const Matrix& xs, Matrix& ys) const override {
        Matrix a(d_out(), d_inp());
        for (std::size_t i = 0; i < w.size(); ++i) a.storage()[i] = weight(w[i]);
        for (std::size_t i = 0; i < xs.rows(); ++i) {
            const double* x = xs.data() + i * d_inp();
            for (std::size_t j = 0; j < d_out(); ++j) {
                const double* aj = a.data() + j * d_inp();
                double s = 0.0;
                for (std::size_t k = 0; k < d_inp(); ++k) s += aj[k] * x[k];
                ys(i, j) = s;
            }
        }
    }
};

class MrrLayer final : public EntrywiseLayer {
public:
    MrrLayer(std::size_t d_inp, std::size_t d_out, double a, double r)
        : EntrywiseLayer(LayerKind::mrr, d_inp, d_out, d_inp * d_out), a_(a), r_(r) {}

protected:
    double weight(double w) const override { return mrr_response(w, a_, r_); }

private:
    double a_, r_;
};

class SlmLayer final : public EntrywiseLayer {
public:
    SlmLayer(std::size_t d_inp, std::size_t d_out)
        : EntrywiseLayer(LayerKind::slm, d_inp, d_out, d_inp * d_out),
          inv_(1.0 / std::sqrt(static_cast<double>(d_inp))) {}

protected:
    double weight(double w) const override { return std::cos(w) * inv_; }

private:
    double inv_;
};

class MonarchLayer final : public BlackBoxLayer {
public:
    MonarchLayer(std::size_t d_inp, std::size_t d_out)
        : BlackBoxLayer(LayerKind::monarch, d_inp, d_out,
                        MonarchShape::from_dims(d_inp, d_out).param_count()),
          shape_(MonarchShape::from_dims(d_inp, d_out)) {}

    const MonarchShape& shape() const { return shape_; }

protected:
    void apply(std::span<const double> w, const Matrix& xs, Matrix& ys) const override {
        const std::size_t bi = shape_.b_inp, ni = shape_.n_inp;
        const std::size_t bo = shape_.b_out, no = shape_.n_out;
        const double inv_r = 1.0 / std::sqrt(static_cast<double>(bi));
        const double inv_l = 1.0 / std::sqrt(static_cast<double>(ni));
        // phase factors once per call, reused across the batch
        std::vector<std::complex<double>> fr(shape_.right_params());
        std::vector<std::complex<double>> fl(shape_.left_params());
        for (std::size_t i = 0; i < fr.size(); ++i) fr[i] = std::polar(inv_r, w[i]);
        for (std::size_t i = 0; i < fl.size(); ++i)
            fl[i] = std::polar(inv_l, w[fr.size() + i]);

        std::vector<std::complex<double>> mid(ni * no), midt(no * ni);
        for (std::size_t row = 0; row < xs.rows(); ++row) {
            const double* x = xs.data() + row * d_inp();
            for (std::size_t i = 0; i < ni; ++i) {
                const std::complex<double>* blk = fr.data() + i * (no * bi);
                for (std::size_t l = 0; l < no; ++l) {
                    std::complex<double> acc{};
                    for (std::size_t k = 0; k < bi; ++k) acc += blk[l * bi + k] * x[i * bi + k];
                    mid[i * no + l] = acc;
                }
            }
            for (std::size_t i = 0; i < ni; ++i)
                for (std::size_t l = 0; l < no; ++l) midt[l * ni + i] = mid[i * no + l];
            for (std::size_t l = 0; l < no; ++l) {
                const std::complex<double>* blk = fl.data() + l * (bo * ni);
                for (std::size_t j = 0; j < bo; ++j) {
                    std::complex<double> acc{};
                    for (std::size_t i = 0; i < ni; ++i) acc += blk[j * ni + i] * midt[l * ni + i];
                    ys(row, l * bo + j) = acc.real();
                }
            }
        }
    }

private:
    MonarchShape shape_;
};

class MeshLayer final : public BlackBoxLayer {
public:
    MeshLayer(LayerKind kind, std::size_t d_inp, std::size_t d_out)
        : BlackBoxLayer(kind, d_inp, d_out,
                        MeshLayout::clements(std::max(d_inp, d_out)).param_count()),
          layout_(MeshLayout::clements(std::max(d_inp, d_out))),
          cell_(kind == LayerKind::mzi ? MeshCell::mzi : MeshCell::mzi3) {}

    const MeshLayout& layout() const { return layout_; }

protected:
    void apply(std::span<const double> w, const Matrix& xs, Matrix& ys) const override {
        const std::size_t n = layout_.n_modes;
        // cell matrices once per call
        std::vector<std::complex<double>> cm(4 * layout_.cell_count());
        for (std::size_t c = 0; c < layout_.cell_count(); ++c) {
            const CMatrix b = mesh_cell(cell_, w[2 * c], w[2 * c + 1]);
            cm[4 * c + 0] = b(0, 0);
            cm[4 * c + 1] = b(0, 1);
            cm[4 * c + 2] = b(1, 0);
            cm[4 * c + 3] = b(1, 1);
        }
        const std::size_t phase_off = 2 * layout_.cell_count();
        std::vector<std::complex<double>> out_phase(n);
        for (std::size_t m = 0; m < n; ++m) out_phase[m] = std::polar(1.0, w[phase_off + m]);

        std::vector<std::complex<double>> amps(n);
        for (std::size_t row = 0; row < xs.rows(); ++row) {
            std::fill(amps.begin(), amps.end(), std::complex<double>{});
            for (std::size_t k = 0; k < d_inp(); ++k) amps[k] = xs(row, k);
            for (std::size_t c = 0; c < layout_.cell_count(); ++c) {
                const std::size_t top = layout_.cells[c].second;
                const std::complex<double> a0 = amps[top];
                const std::complex<double> a1 = amps[top + 1];
                amps[top] = cm[4 * c + 0] * a0 + cm[4 * c + 1] * a1;
                amps[top + 1] = cm[4 * c + 2] * a0 + cm[4 * c + 3] * a1;
            }
            for (std::size_t j = 0; j < d_out(); ++j)
                ys(row, j) = (amps[j] * out_phase[j]).real();
        }
    }

private:
    MeshLayout layout_;
    MeshCell cell_;
};

} // namespace

std::unique_ptr<BlackBoxLayer> make_black_box(const BlackBoxConfig& cfg) {
    require(cfg.d_inp >= 1 && cfg.d_out >= 1, "black box: dimensions must be positive");
    switch (cfg.kind) {
        case LayerKind::matvec:
            return std::make_unique<MatvecLayer>(cfg.d_inp, cfg.d_out);
        case LayerKind::mrr:
            require(cfg.mrr_a > 0.0 && cfg.mrr_a < 1.0 && cfg.mrr_r > 0.0 && cfg.mrr_r < 1.0,
                    "mrr: a and r must lie in (0, 1)");
            return std::make_unique<MrrLayer>(cfg.d_inp, cfg.d_out, cfg.mrr_a, cfg.mrr_r);
        case LayerKind::slm:
            return std::make_unique<SlmLayer>(cfg.d_inp, cfg.d_out);
        case LayerKind::monarch:
            return std::make_unique<MonarchLayer>(cfg.d_inp, cfg.d_out);
        case LayerKind::mzi:
        case LayerKind::mzi3:
            return std::make_unique<MeshLayer>(cfg.kind, cfg.d_inp, cfg.d_out);
    }
    throw std::invalid_argument("make_black_box: unknown kind");
}

std::vector<double> random_params(const BlackBoxLayer& layer, RngStream& stream) {
    std::vector<double> w(layer.d_bb());
    if (layer.kind() == LayerKind::matvec) {
        stream.fill_normal(w);
        const double inv = 1.0 / std::sqrt(static_cast<double>(layer.d_inp()));
        for (double& v : w) v *= inv;
    } else {
        for (double& v : w) v = stream.uniform(0.0, 2.0 * M_PI);
    }
    return w;
}

Matrix materialize(BlackBoxLayer& layer) { return materialize_at(layer, layer.params()); }

Matrix materialize_at(BlackBoxLayer& layer, std::span<const double> w) {
    require(layer.d_inp() <= kMaterializeGuard,
            "materialize: d_inp exceeds the size guard");
    const Matrix basis = Matrix::identity(layer.d_inp());
    return transpose(layer.forward_with_batch(w, basis));
}

} // namespace astralora::photonics
