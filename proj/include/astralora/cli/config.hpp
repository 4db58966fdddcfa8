#ifndef ASTRALORA_CLI_CONFIG_HPP
#define ASTRALORA_CLI_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "astralora/photonics/black_box.hpp"
#include "astralora/trainer/trainer.hpp"

namespace astralora::cli {

struct DataBlock {
    std::string kind;   // spirals | blobs | xor-grid; empty when path is set
    std::string path;   // CSV to load instead of generating
    std::size_t n = 2000;
    double noise = 0.1;
    double test_fraction = 0.25;
};

struct SweepBlock {
    std::vector<std::size_t> ranks;
    std::vector<std::size_t> budgets; // shared value for m_bb and m_sm
    std::vector<std::uint64_t> seeds;
};

struct ProbeBlock {
    std::string study = "all"; // transpose | zo | all
    std::string kind = "matvec";
    std::size_t d_inp = 64;
    std::size_t d_out = 64;
    std::vector<std::size_t> budgets = {10, 100, 1000};
    std::size_t trials = 8;
};

struct RunConfig {
    std::string experiment;
    std::string output_dir; // optional; the --out flag overrides it
    DataBlock data;
    trainer::NetSpec net;
    std::optional<photonics::BlackBoxConfig> black_box;
    trainer::TrainConfig train;
    std::optional<SweepBlock> sweep;
    std::optional<ProbeBlock> probe;
};

/// Strict parse: unknown keys are rejected, every complaint names the
/// offending field ("train.rank: ..."). Throws ConfigError.
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig parse_config_file(const std::string& path);

/// The configuration as actually used, every default made explicit.
std::string resolved_config_json(const RunConfig& cfg);

} // namespace astralora::cli

#endif
