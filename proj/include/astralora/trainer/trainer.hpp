#ifndef ASTRALORA_TRAINER_TRAINER_HPP
#define ASTRALORA_TRAINER_TRAINER_HPP

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "astralora/hybridnet/network.hpp"
#include "astralora/numlin/rng.hpp"
#include "astralora/photonics/black_box.hpp"
#include "astralora/zograd/zograd.hpp"

namespace astralora::trainer {

using hybridnet::Network;
using numlin::Matrix;
using numlin::RngStream;

struct TrainConfig {
    std::size_t steps = 100;
    std::size_t batch = 32;
    double eta = 0.1;    // digital learning rate
    double eta_bb = 0.0; // black-box learning rate; 0 freezes the black box
    double mu = 1e-2;    // zeroth-order smoothing radius
    std::size_t m_bb = 1;
    std::size_t m_sm = 1;
    std::size_t rank = 1;
    enum class SmInit { oracle, sketch };
    SmInit sm_init = SmInit::oracle;
    std::size_t oversample = 8;
    bool share_directions = true;
    std::uint64_t seed = 0;
    std::size_t eval_every = 100;    // 0: evaluate only at the end
    std::size_t sm_error_every = 0;  // 0: never (each measurement costs d_inp queries)
    bool timing = false;             // fills wall_ms; off keeps output byte-stable
};

/// Black-box queries by purpose. `diagnostic` covers measurements that a
/// hardware deployment would not make (surrogate error probes); everything a
/// training run needs lands in the first three.
struct QueryTally {
    std::uint64_t forward = 0;
    std::uint64_t zo = 0;
    std::uint64_t psi = 0;
    std::uint64_t diagnostic = 0;
    std::uint64_t total() const { return forward + zo + psi + diagnostic; }
};

struct StepReport {
    std::size_t step = 0;
    std::string phase; // "train" or "eval"
    double loss = 0.0;
    double accuracy = 0.0;
    double sm_rel_err = std::numeric_limits<double>::quiet_NaN(); // NaN: not measured
    QueryTally tally; // cumulative
    double wall_ms = std::numeric_limits<double>::quiet_NaN();    // NaN: timing off
};

struct NetSpec {
    struct Item {
        enum class Type { dense, relu, gelu, blackbox };
        Type type = Type::dense;
        std::size_t in = 0;
        std::size_t out = 0;
    };
    std::vector<Item> items;
};

struct TrainState {
    Network net;
    RngStream data;
    RngStream zo;
    RngStream psi;
    QueryTally tally;
    std::size_t step = 0;

    TrainState(std::uint64_t seed)
        : data(seed, "data"), zo(seed, "zo"), psi(seed, "psi") {}
};

/// Builds the network (dense layers from the "init" stream, black-box
/// parameters and output scale from "bb-init") and the initial surrogate.
/// Setup queries (scale calibration, surrogate init) are tallied as forward
/// and psi respectively.
TrainState setup_state(const NetSpec& spec,
                       const std::optional<photonics::BlackBoxConfig>& bb,
                       const TrainConfig& cfg);

/// One optimization step:
///   oracle forward -> loss -> surrogate backward -> digital SGD
///   -> zeroth-order black-box step at the pre-move parameters
///   -> splitting-integrator surrogate update tracking that move.
/// Throws TrainAbort with a diagnostic dump if the loss goes non-finite.
StepReport train_step(TrainState& state, const Matrix& xs, std::span<const int> labels,
                      const TrainConfig& cfg);

/// Loss and accuracy on a held-out set (queries tallied as forward).
StepReport evaluate(TrainState& state, const Matrix& xs, std::span<const int> labels);

/// Worst-case relative surrogate error across hybrid nodes; diagnostic
/// queries (d_inp per node).
double measure_sm_error(TrainState& state);

struct RunSummary {
    std::size_t steps = 0;
    double final_loss = 0.0;
    double final_accuracy = 0.0; // on the held-out set
    QueryTally tally;
};

std::string metrics_csv_header();
void append_metrics_row(std::ostream& os, const StepReport& report);

/// Full training loop: uniform batch sampling from the "data" stream, one
/// metrics row per step, eval rows on the configured cadence and at the end.
/// metrics may be null.
RunSummary train_run(TrainState& state, const TrainConfig& cfg, const Matrix& x_train,
                     std::span<const int> y_train, const Matrix& x_test,
                     std::span<const int> y_test, std::ostream* metrics);

} // namespace astralora::trainer

#endif
