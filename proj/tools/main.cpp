#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "astralora/cli/commands.hpp"
#include "astralora/errors.hpp"

namespace cli = astralora::cli;

int main(int argc, char** argv) {
    CLI::App app{"astralora: train networks around black-box photonic layers"};
    app.require_subcommand(1);

    cli::CommonOptions train_opt;
    auto* train = app.add_subcommand("train", "run one training experiment");
    train->add_option("--config", train_opt.config_path, "JSON experiment config")
        ->required();
    train->add_option("--out", train_opt.out_dir, "output directory (overrides config)");
    train->add_option("--seed", train_opt.seed, "seed override");
    train->add_flag("--force", train_opt.force, "reuse a non-empty output directory");

    cli::CommonOptions sweep_opt;
    auto* sweep = app.add_subcommand("sweep", "rank/budget/seed grid of training runs");
    sweep->add_option("--config", sweep_opt.config_path, "JSON experiment config")
        ->required();
    sweep->add_option("--out", sweep_opt.out_dir, "output directory (overrides config)");
    sweep->add_option("--seed", sweep_opt.seed, "base seed override");
    sweep->add_flag("--force", sweep_opt.force, "reuse a non-empty output directory");
    sweep->add_option("--jobs", sweep_opt.jobs, "parallel cells")->default_val(1);

    cli::CommonOptions probe_opt;
    auto* probe = app.add_subcommand("probe", "estimator error studies");
    probe->add_option("--config", probe_opt.config_path, "JSON experiment config")
        ->required();
    probe->add_option("--out", probe_opt.out_dir, "output directory (overrides config)");
    probe->add_option("--seed", probe_opt.seed, "seed override");
    probe->add_flag("--force", probe_opt.force, "reuse a non-empty output directory");

    cli::GenDataOptions gen_opt;
    auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset CSV");
    gen->add_option("--kind", gen_opt.kind, "spirals | blobs | xor-grid")
        ->default_val("spirals");
    gen->add_option("--n", gen_opt.n, "number of samples")->default_val(2000);
    gen->add_option("--noise", gen_opt.noise, "noise level")->default_val(0.1);
    gen->add_option("--seed", gen_opt.seed, "generator seed")->default_val(0);
    gen->add_option("--out", gen_opt.out, "output CSV path")->required();
    gen->add_flag("--force", gen_opt.force, "overwrite an existing file");

    cli::PsiTestOptions psi_opt;
    auto* psi = app.add_subcommand("psi-test", "surrogate integrator self-checks");
    psi->add_option("--seed", psi_opt.seed, "seed")->default_val(0);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitConfig;
    }

    try {
        if (app.got_subcommand(train)) return cli::cmd_train(train_opt);
        if (app.got_subcommand(sweep)) return cli::cmd_sweep(sweep_opt);
        if (app.got_subcommand(probe)) return cli::cmd_probe(probe_opt);
        if (app.got_subcommand(gen)) return cli::cmd_gen_data(gen_opt);
        if (app.got_subcommand(psi)) return cli::cmd_psi_test(psi_opt);
    } catch (const astralora::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitRuntime;
    }
    return cli::kExitConfig;
}
