#include "astralora/hybridnet/network.hpp"

#include <cmath>

namespace astralora::hybridnet {

using numlin::matmul;
using numlin::matmul_nt;
using numlin::matmul_tn;

void Layer::expect_cached(bool cached) const {
    if (!cached)
        throw std::logic_error("backward called without a matching train-mode forward");
}

DenseLayer::DenseLayer(std::size_t in, std::size_t out, RngStream& init)
    : w_(out, in), b_(out, 0.0) {
    init.fill_normal(w_.storage());
    const double std = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : w_.storage()) v *= std;
}

DenseLayer::DenseLayer(Matrix w, std::vector<double> b) : w_(std::move(w)), b_(std::move(b)) {
    require(b_.size() == w_.rows(), "dense: bias length mismatch");
}

Matrix DenseLayer::forward(const Matrix& x, bool train) {
    require(x.cols() == in_dim(), "dense: input dimension mismatch");
    Matrix y = matmul_nt(x, w_);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += b_[j];
    if (train) {
        x_cache_ = x;
        cached_ = true;
    }
    return y;
}

Matrix DenseLayer::backward(const Matrix& dy) {
    expect_cached(cached_ && dy.rows() == x_cache_.rows());
    cached_ = false;
    dw_ = matmul_tn(dy, x_cache_); // out x in
    db_.assign(out_dim(), 0.0);
    for (std::size_t i = 0; i < dy.rows(); ++i)
        for (std::size_t j = 0; j < dy.cols(); ++j) db_[j] += dy(i, j);
    return matmul(dy, w_);
}

void DenseLayer::sgd_step(double eta) {
    if (dw_.empty()) return;
    for (std::size_t i = 0; i < w_.size(); ++i) w_.storage()[i] -= eta * dw_.storage()[i];
    for (std::size_t j = 0; j < b_.size(); ++j) b_[j] -= eta * db_[j];
    dw_ = Matrix();
    db_.clear();
}

void DenseLayer::collect_tensors(const std::string& prefix,
                                 std::vector<NamedTensor>& out) const {
    out.push_back({prefix + ".W", {w_.rows(), w_.cols()}, w_.storage()});
    out.push_back({prefix + ".b", {b_.size()}, b_});
}

void DenseLayer::load_tensors(const std::string& prefix, const std::vector<NamedTensor>& in) {
    for (const auto& t : in) {
        if (t.name == prefix + ".W") {
            require(t.data.size() == w_.size(), "load: W size mismatch at " + t.name);
            w_.storage() = t.data;
        } else if (t.name == prefix + ".b") {
            require(t.data.size() == b_.size(), "load: b size mismatch at " + t.name);
            b_ = t.data;
        }
    }
}

void DenseLayer::param_ptrs(std::vector<double*>& params, std::vector<double*>& grads) {
    // gradients must be materialized for the views to line up
    if (dw_.empty()) dw_ = Matrix(w_.rows(), w_.cols());
    if (db_.empty()) db_.assign(b_.size(), 0.0);
    for (std::size_t i = 0; i < w_.size(); ++i) {
        params.push_back(&w_.storage()[i]);
        grads.push_back(&dw_.storage()[i]);
    }
    for (std::size_t j = 0; j < b_.size(); ++j) {
        params.push_back(&b_[j]);
        grads.push_back(&db_[j]);
    }
}

std::unique_ptr<Layer> DenseLayer::clone() const {
    return std::make_unique<DenseLayer>(w_, b_);
}

Matrix ReluLayer::forward(const Matrix& x, bool train) {
    require(x.cols() == dim_, "relu: dimension mismatch");
    Matrix y = x;
    for (double& v : y.storage()) v = v > 0.0 ? v : 0.0;
    if (train) {
        x_cache_ = x;
        cached_ = true;
    }
    return y;
}

Matrix ReluLayer::backward(const Matrix& dy) {
    expect_cached(cached_ && dy.rows() == x_cache_.rows());
    cached_ = false;
    Matrix dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (x_cache_.storage()[i] <= 0.0) dx.storage()[i] = 0.0;
    return dx;
}

std::unique_ptr<Layer> ReluLayer::clone() const { return std::make_unique<ReluLayer>(dim_); }

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_deriv(double x) {
    const double phi = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return phi + x * pdf;
}

Matrix GeluLayer::forward(const Matrix& x, bool train) {
    require(x.cols() == dim_, "gelu: dimension mismatch");
    Matrix y = x;
    for (double& v : y.storage()) v = gelu(v);
    if (train) {
        x_cache_ = x;
        cached_ = true;
    }
    return y;
}

Matrix GeluLayer::backward(const Matrix& dy) {
    expect_cached(cached_ && dy.rows() == x_cache_.rows());
    cached_ = false;
    Matrix dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        dx.storage()[i] *= gelu_deriv(x_cache_.storage()[i]);
    return dx;
}

std::unique_ptr<Layer> GeluLayer::clone() const { return std::make_unique<GeluLayer>(dim_); }

HybridNode::HybridNode(std::shared_ptr<photonics::BlackBoxLayer> bb,
                       surrogate::SurrogateModel sm, double scale)
    : bb_(std::move(bb)), sm_(std::move(sm)), scale_(scale) {
    require(bb_ != nullptr, "hybrid node: black box required");
    require(sm_.d_inp() == bb_->d_inp() && sm_.d_out() == bb_->d_out(),
            "hybrid node: surrogate shape mismatch");
    d_inp_ = bb_->d_inp();
    d_out_ = bb_->d_out();
}

HybridNode::HybridNode(Matrix twin, double scale, std::size_t d_inp, std::size_t d_out)
    : mode_(Mode::digital_twin), twin_(std::move(twin)), d_inp_(d_inp), d_out_(d_out),
      scale_(scale) {}

std::size_t HybridNode::in_dim() const { return d_inp_; }
std::size_t HybridNode::out_dim() const { return d_out_; }

Matrix HybridNode::forward(const Matrix& x, bool train) {
    require(x.cols() == d_inp_, "hybrid node: input dimension mismatch");
    Matrix y_raw = mode_ == Mode::hardware ? bb_->forward_batch(x) : matmul_nt(x, twin_);
    Matrix y = numlin::scale(y_raw, scale_);
    if (train) {
        x_cache_ = x;
        y_raw_cache_ = std::move(y_raw);
        cached_ = true;
        have_error_ = false;
    }
    return y;
}

Matrix HybridNode::backward(const Matrix& dy) {
    expect_cached(cached_ && dy.rows() == x_cache_.rows());
    cached_ = false;
    // exact gradient for the scale: d/ds sum <dy, s * y_raw>
    scale_grad_ = 0.0;
    for (std::size_t i = 0; i < dy.size(); ++i)
        scale_grad_ += dy.storage()[i] * y_raw_cache_.storage()[i];

    v_cache_ = numlin::scale(dy, scale_);
    have_error_ = true;

    Matrix dx(dy.rows(), d_inp_);
    if (mode_ == Mode::hardware) {
        // surrogate transpose; the hardware is never queried here
        for (std::size_t i = 0; i < dy.rows(); ++i)
            dx.set_row(i, sm_.backward_input(v_cache_.row(i)));
    } else {
        dx = matmul(v_cache_, twin_);
    }
    return dx;
}

void HybridNode::sgd_step(double eta) {
    scale_ -= eta * scale_grad_;
    scale_grad_ = 0.0;
}

void HybridNode::collect_tensors(const std::string& prefix,
                                 std::vector<NamedTensor>& out) const {
    out.push_back({prefix + ".scale", {1}, {scale_}});
    if (mode_ == Mode::hardware) {
        out.push_back({prefix + ".w", {bb_->d_bb()}, bb_->params()});
        out.push_back({prefix + ".U", {sm_.u.rows(), sm_.u.cols()}, sm_.u.storage()});
        out.push_back({prefix + ".S", {sm_.s.rows(), sm_.s.cols()}, sm_.s.storage()});
        out.push_back({prefix + ".V", {sm_.v.rows(), sm_.v.cols()}, sm_.v.storage()});
    } else {
        out.push_back({prefix + ".A", {twin_.rows(), twin_.cols()}, twin_.storage()});
    }
}

void HybridNode::load_tensors(const std::string& prefix, const std::vector<NamedTensor>& in) {
    auto fill = [&](const std::string& name, std::vector<double>& dst) {
        for (const auto& t : in)
            if (t.name == prefix + name) {
                require(t.data.size() == dst.size(), "load: size mismatch at " + t.name);
                dst = t.data;
            }
    };
    for (const auto& t : in)
        if (t.name == prefix + ".scale" && t.data.size() == 1) scale_ = t.data[0];
    if (mode_ == Mode::hardware) {
        std::vector<double> w = bb_->params();
        fill(".w", w);
        bb_->set_params(w);
        fill(".U", sm_.u.storage());
        fill(".S", sm_.s.storage());
        fill(".V", sm_.v.storage());
    } else {
        fill(".A", twin_.storage());
    }
}

std::unique_ptr<Layer> HybridNode::clone() const {
    if (mode_ == Mode::hardware) {
        // the physical device is shared, not duplicated
        return std::unique_ptr<Layer>(new HybridNode(bb_, sm_, scale_));
    }
    return std::unique_ptr<Layer>(new HybridNode(twin_, scale_, d_inp_, d_out_));
}

std::unique_ptr<HybridNode> HybridNode::make_digital_twin() {
    Matrix a = mode_ == Mode::hardware ? photonics::materialize(*bb_) : twin_;
    return std::unique_ptr<HybridNode>(new HybridNode(std::move(a), scale_, d_inp_, d_out_));
}

void HybridNode::set_sm(surrogate::SurrogateModel sm) {
    require(sm.d_inp() == d_inp_ && sm.d_out() == d_out_, "set_sm: shape mismatch");
    sm_ = std::move(sm);
}

double calibrate_scale(photonics::BlackBoxLayer& layer, RngStream& stream,
                       std::size_t n_probe) {
    require(n_probe >= 1, "calibrate_scale: need at least one probe");
    Matrix z(n_probe, layer.d_inp());
    stream.fill_normal(z.storage());
    const Matrix y = layer.forward_batch(z);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_probe; ++i) {
        const auto row = y.row(i);
        acc += numlin::dot(row, row);
    }
    const double fro2 = acc / static_cast<double>(n_probe);
    if (fro2 <= 0.0) return 1.0;
    return std::sqrt(static_cast<double>(layer.d_out()) / fro2);
}

LossResult softmax_xent(const Matrix& logits, std::span<const int> labels) {
    require(logits.rows() == labels.size(), "loss: batch size mismatch");
    require(logits.rows() >= 1 && logits.cols() >= 2, "loss: need a batch and >= 2 classes");
    const std::size_t b = logits.rows();
    const std::size_t k = logits.cols();
    LossResult res;
    res.dlogits = Matrix(b, k);
    std::size_t hits = 0;
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const int y = labels[i];
        require(y >= 0 && static_cast<std::size_t>(y) < k, "loss: label out of range");
        const auto row = logits.row(i);
        std::size_t arg = 0;
        double mx = row[0];
        for (std::size_t j = 1; j < k; ++j)
            if (row[j] > mx) {
                mx = row[j];
                arg = j;
            }
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
        const double logz = std::log(z) + mx;
        loss += logz - row[static_cast<std::size_t>(y)];
        if (arg == static_cast<std::size_t>(y)) ++hits;
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(row[j] - mx) / z;
            res.dlogits(i, j) = (p - (j == static_cast<std::size_t>(y) ? 1.0 : 0.0)) /
                                static_cast<double>(b);
        }
    }
    res.loss = loss / static_cast<double>(b);
    res.accuracy = static_cast<double>(hits) / static_cast<double>(b);
    return res;
}

void Network::add(std::unique_ptr<Layer> layer) {
    if (!layers_.empty())
        require(layers_.back()->out_dim() == layer->in_dim(),
                "network: layer dimension chain mismatch");
    if (auto* h = dynamic_cast<HybridNode*>(layer.get())) hybrids_.push_back(h);
    layers_.push_back(std::move(layer));
}

std::size_t Network::in_dim() const {
    require(!layers_.empty(), "network: empty");
    return layers_.front()->in_dim();
}

std::size_t Network::out_dim() const {
    require(!layers_.empty(), "network: empty");
    return layers_.back()->out_dim();
}

Matrix Network::forward(const Matrix& x, bool train) {
    Matrix h = x;
    for (auto& l : layers_) h = l->forward(h, train);
    return h;
}

Matrix Network::backward(const Matrix& dlogits) {
    Matrix g = dlogits;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
    return g;
}

void Network::sgd_step(double eta) {
    for (auto& l : layers_) l->sgd_step(eta);
}

std::vector<NamedTensor> Network::tensors() const {
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->collect_tensors("layer" + std::to_string(i), out);
    return out;
}

void Network::load_tensors(const std::vector<NamedTensor>& in) {
    for (std::size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->load_tensors("layer" + std::to_string(i), in);
}

void Network::param_ptrs(std::vector<double*>& params, std::vector<double*>& grads) {
    for (auto& l : layers_) l->param_ptrs(params, grads);
}

Network Network::digital_twin() {
    Network out;
    for (auto& l : layers_) {
        if (auto* h = dynamic_cast<HybridNode*>(l.get()))
            out.add(h->make_digital_twin());
        else
            out.add(l->clone());
    }
    return out;
}

std::uint64_t Network::query_count() const {
    std::uint64_t n = 0;
    for (const auto* h : hybrids_)
        if (h->mode() == HybridNode::Mode::hardware) n += h->black_box().query_count();
    return n;
}

} // namespace astralora::hybridnet
