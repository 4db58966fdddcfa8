#include "astralora/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "astralora/errors.hpp"

namespace astralora::trainer {

using hybridnet::DenseLayer;
using hybridnet::GeluLayer;
using hybridnet::HybridNode;
using hybridnet::ReluLayer;

TrainState setup_state(const NetSpec& spec,
                       const std::optional<photonics::BlackBoxConfig>& bb,
                       const TrainConfig& cfg) {
    require(!spec.items.empty(), "setup_state: empty network");
    TrainState state(cfg.seed);
    RngStream init(cfg.seed, "init");
    RngStream bb_init(cfg.seed, "bb-init");

    for (const auto& item : spec.items) {
        using Type = NetSpec::Item::Type;
        switch (item.type) {
            case Type::dense:
                state.net.add(std::make_unique<DenseLayer>(item.in, item.out, init));
                break;
            case Type::relu:
                state.net.add(std::make_unique<ReluLayer>(item.in));
                break;
            case Type::gelu:
                state.net.add(std::make_unique<GeluLayer>(item.in));
                break;
            case Type::blackbox: {
                require(bb.has_value(), "setup_state: blackbox item without a config");
                auto layer = std::shared_ptr<photonics::BlackBoxLayer>(
                    photonics::make_black_box(*bb));
                layer->set_params(photonics::random_params(*layer, bb_init));

                std::uint64_t q0 = layer->query_count();
                const double scale = hybridnet::calibrate_scale(*layer, bb_init);
                state.tally.forward += layer->query_count() - q0;

                q0 = layer->query_count();
                surrogate::SurrogateModel sm =
                    cfg.sm_init == TrainConfig::SmInit::oracle
                        ? surrogate::init_oracle(*layer, cfg.rank)
                        : surrogate::init_sketch(*layer, cfg.rank, cfg.oversample,
                                                 cfg.m_sm, bb_init);
                state.tally.psi += layer->query_count() - q0;

                state.net.add(std::make_unique<HybridNode>(layer, std::move(sm), scale));
                break;
            }
        }
    }
    return state;
}

namespace {

void check_tally(const TrainState& state) {
    if (state.tally.total() != state.net.query_count())
        throw std::logic_error("query tally out of sync with layer counters");
}

[[noreturn]] void abort_run(TrainState& state, double loss, const char* where) {
    std::ostringstream os;
    os << "non-finite loss at step " << state.step << " (" << where << "): loss=" << loss;
    for (auto* h : state.net.hybrid_nodes()) {
        os << "; scale=" << h->scale();
        if (h->mode() == HybridNode::Mode::hardware) {
            const auto& w = h->black_box().params();
            os << " |w|=" << numlin::nrm2(w);
        }
    }
    throw TrainAbort(os.str());
}

} // namespace

StepReport train_step(TrainState& state, const Matrix& xs, std::span<const int> labels,
                      const TrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    state.step += 1;

    std::uint64_t q0 = state.net.query_count();
    const Matrix logits = state.net.forward(xs, true);
    state.tally.forward += state.net.query_count() - q0;

    const auto loss = hybridnet::softmax_xent(logits, labels);
    if (!std::isfinite(loss.loss)) abort_run(state, loss.loss, "train forward");

    // input gradients flow through the surrogate, never the hardware
    q0 = state.net.query_count();
    state.net.backward(loss.dlogits);
    if (state.net.query_count() != q0)
        throw std::logic_error("backward pass issued black-box queries");

    state.net.sgd_step(cfg.eta);

    if (cfg.eta_bb > 0.0) {
        for (auto* node : state.net.hybrid_nodes()) {
            if (node->mode() != HybridNode::Mode::hardware) continue;
            require(node->has_error_cache(), "train_step: missing error cache");
            auto& bb = node->black_box();
            const std::vector<double> w0 = bb.params();

            zograd::ZoConfig zc{cfg.mu, cfg.m_bb, cfg.share_directions};
            q0 = bb.query_count();
            const auto est = zograd::estimate_batch(bb, w0, node->input_cache(),
                                                    node->error_cache(), zc, state.zo);
            state.tally.zo += bb.query_count() - q0;

            std::vector<double> w1 = w0;
            numlin::axpy(-cfg.eta_bb, est.g, w1);

            q0 = bb.query_count();
            node->set_sm(surrogate::ipsi_update(node->sm(), bb, w0, w1, cfg.m_sm,
                                                state.psi));
            state.tally.psi += bb.query_count() - q0;

            bb.set_params(w1);
            node->clear_error_cache();
        }
    }
    check_tally(state);

    StepReport rep;
    rep.step = state.step;
    rep.phase = "train";
    rep.loss = loss.loss;
    rep.accuracy = loss.accuracy;
    rep.tally = state.tally;
    if (cfg.timing) {
        const auto t1 = std::chrono::steady_clock::now();
        rep.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    return rep;
}

StepReport evaluate(TrainState& state, const Matrix& xs, std::span<const int> labels) {
    const std::uint64_t q0 = state.net.query_count();
    const Matrix logits = state.net.forward(xs, false);
    state.tally.forward += state.net.query_count() - q0;
    const auto loss = hybridnet::softmax_xent(logits, labels);
    if (!std::isfinite(loss.loss)) abort_run(state, loss.loss, "eval forward");
    check_tally(state);

    StepReport rep;
    rep.step = state.step;
    rep.phase = "eval";
    rep.loss = loss.loss;
    rep.accuracy = loss.accuracy;
    rep.tally = state.tally;
    return rep;
}

double measure_sm_error(TrainState& state) {
    double worst = 0.0;
    for (auto* node : state.net.hybrid_nodes()) {
        if (node->mode() != HybridNode::Mode::hardware) continue;
        auto& bb = node->black_box();
        const std::uint64_t q0 = bb.query_count();
        worst = std::max(worst, surrogate::sm_rel_error(bb, node->sm()));
        state.tally.diagnostic += bb.query_count() - q0;
    }
    check_tally(state);
    return worst;
}

std::string metrics_csv_header() {
    return "step,phase,loss,accuracy,sm_rel_err,q_forward,q_zo,q_psi,q_total,wall_ms";
}

namespace {

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace

void append_metrics_row(std::ostream& os, const StepReport& r) {
    os << r.step << ',' << r.phase << ',' << fmt_g(r.loss) << ',' << fmt_g(r.accuracy)
       << ',';
    if (std::isfinite(r.sm_rel_err)) os << fmt_g(r.sm_rel_err);
    os << ',' << r.tally.forward << ',' << r.tally.zo << ',' << r.tally.psi << ','
       << r.tally.total() << ',';
    if (std::isfinite(r.wall_ms)) os << fmt_g(r.wall_ms);
    os << '\n';
}

RunSummary train_run(TrainState& state, const TrainConfig& cfg, const Matrix& x_train,
                     std::span<const int> y_train, const Matrix& x_test,
                     std::span<const int> y_test, std::ostream* metrics) {
    require(x_train.rows() == y_train.size() && x_train.rows() >= 1,
            "train_run: bad training set");
    require(x_test.rows() == y_test.size(), "train_run: bad test set");
    require(cfg.batch >= 1 && cfg.steps >= 1, "train_run: steps and batch must be positive");

    if (metrics) *metrics << metrics_csv_header() << '\n';

    const std::size_t n = x_train.rows();
    Matrix xb(cfg.batch, x_train.cols());
    std::vector<int> yb(cfg.batch);

    RunSummary summary;
    for (std::size_t s = 0; s < cfg.steps; ++s) {
        for (std::size_t i = 0; i < cfg.batch; ++i) {
            const std::size_t idx = static_cast<std::size_t>(state.data.index(n));
            xb.set_row(i, x_train.row(idx));
            yb[i] = y_train[idx];
        }
        StepReport rep = train_step(state, xb, yb, cfg);
        if (cfg.sm_error_every > 0 && state.step % cfg.sm_error_every == 0)
            rep.sm_rel_err = measure_sm_error(state);
        rep.tally = state.tally;
        summary.final_loss = rep.loss;
        if (metrics) append_metrics_row(*metrics, rep);

        const bool last = s + 1 == cfg.steps;
        if (x_test.rows() > 0 &&
            ((cfg.eval_every > 0 && state.step % cfg.eval_every == 0) || last)) {
            const StepReport ev = evaluate(state, x_test, y_test);
            summary.final_accuracy = ev.accuracy;
            if (metrics) append_metrics_row(*metrics, ev);
        }
    }
    summary.steps = state.step;
    summary.tally = state.tally;
    return summary;
}

} // namespace astralora::trainer
