#ifndef ASTRALORA_HYBRIDNET_NETWORK_HPP
#define ASTRALORA_HYBRIDNET_NETWORK_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "astralora/numlin/matrix.hpp"
#include "astralora/numlin/rng.hpp"
#include "astralora/photonics/black_box.hpp"
#include "astralora/surrogate/surrogate.hpp"

namespace astralora::hybridnet {

using numlin::Matrix;
using numlin::RngStream;

struct NamedTensor {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> data;
};

/// One node of the chain. forward(train=true) caches what backward needs;
/// backward consumes the cache exactly once and accumulates parameter
/// gradients; sgd_step applies and clears them.
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::size_t in_dim() const = 0;
    virtual std::size_t out_dim() const = 0;

    virtual Matrix forward(const Matrix& x, bool train) = 0;
    virtual Matrix backward(const Matrix& dy) = 0;
    virtual void sgd_step(double /*eta*/) {}

    virtual void collect_tensors(const std::string& /*prefix*/,
                                 std::vector<NamedTensor>& /*out*/) const {}
    virtual void load_tensors(const std::string& /*prefix*/,
                              const std::vector<NamedTensor>& /*in*/) {}

    // Aligned parameter/gradient views for finite-difference validation.
    virtual void param_ptrs(std::vector<double*>& /*params*/,
                            std::vector<double*>& /*grads*/) {}

    virtual std::unique_ptr<Layer> clone() const = 0;

protected:
    void expect_cached(bool cached) const;
};

class DenseLayer final : public Layer {
public:
    DenseLayer(std::size_t in, std::size_t out, RngStream& init);
    DenseLayer(Matrix w, std::vector<double> b);

    std::size_t in_dim() const override { return w_.cols(); }
    std::size_t out_dim() const override { return w_.rows(); }

    Matrix forward(const Matrix& x, bool train) override;
    Matrix backward(const Matrix& dy) override;
    void sgd_step(double eta) override;

    void collect_tensors(const std::string& prefix, std::vector<NamedTensor>& out) const override;
    void load_tensors(const std::string& prefix, const std::vector<NamedTensor>& in) override;
    void param_ptrs(std::vector<double*>& params, std::vector<double*>& grads) override;
    std::unique_ptr<Layer> clone() const override;

    const Matrix& weights() const { return w_; }
    const std::vector<double>& bias() const { return b_; }

private:
    Matrix w_; // out x in
    std::vector<double> b_;
    Matrix x_cache_, dw_;
    std::vector<double> db_;
    bool cached_ = false;
};

class ReluLayer final : public Layer {
public:
    explicit ReluLayer(std::size_t dim) : dim_(dim) {}
    std::size_t in_dim() const override { return dim_; }
    std::size_t out_dim() const override { return dim_; }
    Matrix forward(const Matrix& x, bool train) override;
    Matrix backward(const Matrix& dy) override;
    std::unique_ptr<Layer> clone() const override;

private:
    std::size_t dim_;
    Matrix x_cache_;
    bool cached_ = false;
};

class GeluLayer final : public Layer {
public:
    explicit GeluLayer(std::size_t dim) : dim_(dim) {}
    std::size_t in_dim() const override { return dim_; }
    std::size_t out_dim() const override { return dim_; }
    Matrix forward(const Matrix& x, bool train) override;
    Matrix backward(const Matrix& dy) override;
    std::unique_ptr<Layer> clone() const override;

private:
    std::size_t dim_;
    Matrix x_cache_;
    bool cached_ = false;
};

double gelu(double x);
double gelu_deriv(double x);

/// Wraps a black box inside the differentiable chain. The forward pass reads
/// the hardware (or its twin); the backward pass never queries it: the input
/// gradient flows through the low-rank surrogate instead. A trainable scalar
/// output scale keeps the node's magnitude compatible with its neighbours
/// and receives an exact gradient (the raw output is known from forward).
class HybridNode final : public Layer {
public:
    enum class Mode { hardware, digital_twin };

    HybridNode(std::shared_ptr<photonics::BlackBoxLayer> bb, surrogate::SurrogateModel sm,
               double scale);

    std::size_t in_dim() const override;
    std::size_t out_dim() const override;

    Matrix forward(const Matrix& x, bool train) override;
    Matrix backward(const Matrix& dy) override;
    void sgd_step(double eta) override;

    void collect_tensors(const std::string& prefix, std::vector<NamedTensor>& out) const override;
    void load_tensors(const std::string& prefix, const std::vector<NamedTensor>& in) override;
    std::unique_ptr<Layer> clone() const override;

    /// An explicit stand-in that materializes the black box once and then
    /// behaves like a frozen dense layer with the same scale. Its forward and
    /// its exact-transpose backward make it the reference the surrogate path
    /// is compared against. Costs d_inp queries up front, none afterwards.
    std::unique_ptr<HybridNode> make_digital_twin();

    Mode mode() const { return mode_; }
    double scale() const { return scale_; }
    photonics::BlackBoxLayer& black_box() { return *bb_; }
    const photonics::BlackBoxLayer& black_box() const { return *bb_; }
    const std::shared_ptr<photonics::BlackBoxLayer>& black_box_ptr() const { return bb_; }
    surrogate::SurrogateModel& sm() { return sm_; }
    const surrogate::SurrogateModel& sm() const { return sm_; }
    void set_sm(surrogate::SurrogateModel sm);

    /// Cached batch input and scaled upstream error from the last
    /// forward/backward pair; these feed the parameter update.
    const Matrix& input_cache() const { return x_cache_; }
    const Matrix& error_cache() const { return v_cache_; }
    bool has_error_cache() const { return have_error_; }
    void clear_error_cache() { have_error_ = false; }

private:
    HybridNode(Matrix twin, double scale, std::size_t d_inp, std::size_t d_out);

    std::shared_ptr<photonics::BlackBoxLayer> bb_; // null in twin mode
    surrogate::SurrogateModel sm_;
    Mode mode_ = Mode::hardware;
    Matrix twin_;       // materialized map, twin mode only
    std::size_t d_inp_ = 0, d_out_ = 0;
    double scale_ = 1.0;
    double scale_grad_ = 0.0;
    Matrix x_cache_, y_raw_cache_, v_cache_;
    bool cached_ = false;
    bool have_error_ = false;
};

/// y = scale * f(x); a sensible default scale sqrt(d_out) / ||A||_F keeps
/// outputs O(1) per coordinate. The norm is estimated from n_probe Gaussian
/// queries (E ||A z||^2 = ||A||_F^2).
double calibrate_scale(photonics::BlackBoxLayer& layer, RngStream& stream,
                       std::size_t n_probe = 8);

struct LossResult {
    double loss = 0.0;
    double accuracy = 0.0;
    Matrix dlogits; // d(mean loss)/d(logits)
};

/// Mean softmax cross-entropy over the batch, with max-subtraction for
/// stability; accuracy counts argmax hits (first index wins ties).
LossResult softmax_xent(const Matrix& logits, std::span<const int> labels);

class Network {
public:
    Network() = default;

    void add(std::unique_ptr<Layer> layer);
    std::size_t size() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }

    std::size_t in_dim() const;
    std::size_t out_dim() const;

    Matrix forward(const Matrix& x, bool train);
    Matrix backward(const Matrix& dlogits);
    void sgd_step(double eta);

    std::vector<HybridNode*>& hybrid_nodes() { return hybrids_; }
    const std::vector<HybridNode*>& hybrid_nodes() const { return hybrids_; }

    std::vector<NamedTensor> tensors() const;
    void load_tensors(const std::vector<NamedTensor>& in);
    void param_ptrs(std::vector<double*>& params, std::vector<double*>& grads);

    /// Deep copy with every hybrid node replaced by its digital twin
    /// (queries each black box d_inp times to materialize it).
    Network digital_twin();

    /// Total black-box queries across hybrid nodes.
    std::uint64_t query_count() const;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<HybridNode*> hybrids_;
};

} // namespace astralora::hybridnet

#endif
