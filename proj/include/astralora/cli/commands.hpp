#ifndef ASTRALORA_CLI_COMMANDS_HPP
#define ASTRALORA_CLI_COMMANDS_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace astralora::cli {

// Exit codes: 0 success, 2 configuration/usage error, 3 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct CommonOptions {
    std::string config_path;
    std::string out_dir;                  // --out, overrides config output_dir
    std::optional<std::uint64_t> seed;    // --seed, overrides train.seed
    bool force = false;                   // --force, allow non-empty output dir
    std::size_t jobs = 1;                 // --jobs, sweep parallelism
};

int cmd_train(const CommonOptions& opt);
int cmd_sweep(const CommonOptions& opt);
int cmd_probe(const CommonOptions& opt);

struct GenDataOptions {
    std::string kind = "spirals";
    std::size_t n = 2000;
    double noise = 0.1;
    std::uint64_t seed = 0;
    std::string out;
    bool force = false;
};

int cmd_gen_data(const GenDataOptions& opt);

struct PsiTestOptions {
    std::uint64_t seed = 0;
};

/// Self-checks of the splitting integrator against analytic ground truth;
/// prints one PASS/FAIL line per property.
int cmd_psi_test(const PsiTestOptions& opt);

} // namespace astralora::cli

#endif
