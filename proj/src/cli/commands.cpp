#include "astralora/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "astralora/cli/checkpoint.hpp"
#include "astralora/cli/config.hpp"
#include "astralora/cli/dataset.hpp"
#include "astralora/cli/log.hpp"
#include "astralora/errors.hpp"
#include "astralora/numlin/decomp.hpp"
#include "astralora/surrogate/surrogate.hpp"
#include "astralora/zograd/zograd.hpp"

namespace astralora::cli {

namespace fs = std::filesystem;

using numlin::Matrix;
using numlin::RngStream;

namespace {

std::string fmt(const char* f, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

void prepare_run_dir(const std::string& dir, bool force) {
    require(!dir.empty(), "output dir must not be empty");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output dir " + dir + ": " + ec.message());
    if (!force && !fs::is_empty(dir))
        throw IoError("output dir " + dir + " is not empty; pass --force to reuse it");
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << content;
    if (!os) throw IoError("write failed: " + path);
}

void stash_configs(const std::string& config_path, const RunConfig& cfg,
                   const std::string& out_dir) {
    write_file(out_dir + "/config.json", read_file(config_path)); // byte-for-byte copy
    write_file(out_dir + "/config_resolved.json", resolved_config_json(cfg));
}

Split load_or_generate(const RunConfig& cfg) {
    RngStream gen(cfg.train.seed, "data-gen");
    Dataset full = cfg.data.kind.empty()
                       ? load_dataset_csv(cfg.data.path)
                       : gen_dataset(cfg.data.kind, cfg.data.n, cfg.data.noise, gen);
    return split_dataset(full, cfg.data.test_fraction, gen);
}

struct CellResult {
    std::size_t rank = 0, budget = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    double accuracy = 0.0;
    std::uint64_t queries = 0;
    std::string error;
};

CellResult run_cell(const RunConfig& base, std::size_t rank, std::size_t budget,
                    std::uint64_t seed, const std::string& cell_dir) {
    CellResult res;
    res.rank = rank;
    res.budget = budget;
    res.seed = seed;
    try {
        RunConfig cfg = base;
        cfg.train.rank = rank;
        cfg.train.m_bb = budget;
        cfg.train.m_sm = budget;
        cfg.train.seed = seed;
        if (cfg.black_box) {
            const std::size_t cap = std::min(cfg.black_box->d_inp, cfg.black_box->d_out);
            if (cfg.train.rank > cap)
                throw ConfigError("sweep.ranks: " + std::to_string(rank) +
                                  " exceeds min(black_box dims) = " + std::to_string(cap));
        }
        fs::create_directories(cell_dir);
        Split sp = load_or_generate(cfg);
        trainer::TrainState state = trainer::setup_state(cfg.net, cfg.black_box, cfg.train);
        std::ofstream metrics(cell_dir + "/metrics.csv", std::ios::binary);
        if (!metrics) throw IoError("cannot open for writing: " + cell_dir + "/metrics.csv");
        const auto sum = trainer::train_run(state, cfg.train, sp.train.features,
                                            sp.train.labels, sp.test.features,
                                            sp.test.labels, &metrics);
        checkpoint_write(cell_dir + "/checkpoint.bin", state.net.tensors());
        res.ok = true;
        res.accuracy = sum.final_accuracy;
        res.queries = sum.tally.total();
    } catch (const std::exception& e) {
        res.error = e.what();
    }
    return res;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

} // namespace

int cmd_train(const CommonOptions& opt) {
    RunConfig cfg = parse_config_file(opt.config_path);
    if (opt.seed) cfg.train.seed = *opt.seed;
    const std::string out = !opt.out_dir.empty() ? opt.out_dir : cfg.output_dir;
    if (out.empty())
        throw ConfigError("output_dir: set it in the config or pass --out");
    prepare_run_dir(out, opt.force);
    stash_configs(opt.config_path, cfg, out);

    Split sp = load_or_generate(cfg);
    log_info("train " + cfg.experiment + ": " + std::to_string(sp.train.size()) +
             " train / " + std::to_string(sp.test.size()) + " test samples");

    trainer::TrainState state = trainer::setup_state(cfg.net, cfg.black_box, cfg.train);
    std::ofstream metrics(out + "/metrics.csv", std::ios::binary);
    if (!metrics) throw IoError("cannot open for writing: " + out + "/metrics.csv");

    trainer::RunSummary sum;
    try {
        sum = trainer::train_run(state, cfg.train, sp.train.features, sp.train.labels,
                                 sp.test.features, sp.test.labels, &metrics);
    } catch (const TrainAbort& e) {
        write_file(out + "/abort.txt", std::string(e.what()) + "\n");
        throw;
    }
    metrics.close();
    checkpoint_write(out + "/checkpoint.bin", state.net.tensors());

    std::cout << "train " << cfg.experiment << ": steps=" << sum.steps
              << " loss=" << fmt("%.6g", sum.final_loss)
              << " test_acc=" << fmt("%.6g", sum.final_accuracy)
              << " queries=" << sum.tally.total() << " -> " << out << "\n";
    return kExitOk;
}

int cmd_sweep(const CommonOptions& opt) {
    RunConfig cfg = parse_config_file(opt.config_path);
    if (!cfg.sweep) throw ConfigError("sweep: block missing from config");
    if (opt.seed) cfg.train.seed = *opt.seed;
    const std::string out = !opt.out_dir.empty() ? opt.out_dir : cfg.output_dir;
    if (out.empty())
        throw ConfigError("output_dir: set it in the config or pass --out");
    prepare_run_dir(out, opt.force);
    stash_configs(opt.config_path, cfg, out);

    struct Cell {
        std::size_t rank, budget;
        std::uint64_t seed;
        std::string dir;
    };
    std::vector<Cell> cells;
    for (std::size_t r : cfg.sweep->ranks)
        for (std::size_t m : cfg.sweep->budgets)
            for (std::uint64_t s : cfg.sweep->seeds)
                cells.push_back({r, m, s,
                                 out + "/cells/r" + std::to_string(r) + "-M" +
                                     std::to_string(m) + "-s" + std::to_string(s)});

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    const std::size_t jobs = std::max<std::size_t>(1, opt.jobs);
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            const Cell& c = cells[i];
            log_debug("sweep cell r=" + std::to_string(c.rank) +
                      " M=" + std::to_string(c.budget) + " seed=" + std::to_string(c.seed));
            results[i] = run_cell(cfg, c.rank, c.budget, c.seed, c.dir);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::ofstream agg(out + "/aggregate.csv", std::ios::binary);
    if (!agg) throw IoError("cannot open for writing: " + out + "/aggregate.csv");
    agg << "rank,budget,seeds_ok,seeds_failed,acc_mean,acc_min,acc_max,queries_mean\n";
    bool any_failed = false;
    for (std::size_t r : cfg.sweep->ranks)
        for (std::size_t m : cfg.sweep->budgets) {
            double acc_sum = 0.0, acc_min = 1.0, acc_max = 0.0, q_sum = 0.0;
            std::size_t ok = 0, failed = 0;
            for (const auto& res : results) {
                if (res.rank != r || res.budget != m) continue;
                if (!res.ok) {
                    ++failed;
                    log_error("cell r=" + std::to_string(r) + " M=" + std::to_string(m) +
                              " seed=" + std::to_string(res.seed) + ": " + res.error);
                    continue;
                }
                ++ok;
                acc_sum += res.accuracy;
                acc_min = std::min(acc_min, res.accuracy);
                acc_max = std::max(acc_max, res.accuracy);
                q_sum += static_cast<double>(res.queries);
            }
            any_failed = any_failed || failed > 0;
            agg << r << ',' << m << ',' << ok << ',' << failed << ',';
            if (ok > 0) {
                const double n = static_cast<double>(ok);
                agg << fmt("%.10g", acc_sum / n) << ',' << fmt("%.10g", acc_min) << ','
                    << fmt("%.10g", acc_max) << ',' << fmt("%.10g", q_sum / n);
            } else {
                agg << ",,,";
            }
            agg << '\n';
            std::cout << "sweep r=" << r << " M=" << m << ": ok=" << ok
                      << " failed=" << failed;
            if (ok > 0) std::cout << " acc_mean=" << fmt("%.4g", acc_sum / double(ok));
            std::cout << "\n";
        }
    std::cout << "sweep: wrote " << out << "/aggregate.csv\n";
    return any_failed ? kExitRuntime : kExitOk;
}

int cmd_probe(const CommonOptions& opt) {
    RunConfig cfg = parse_config_file(opt.config_path);
    if (!cfg.probe) throw ConfigError("probe: block missing from config");
    if (opt.seed) cfg.train.seed = *opt.seed;
    const ProbeBlock& pb = *cfg.probe;
    if ((pb.study == "zo" || pb.study == "all") && pb.kind != "matvec")
        throw ConfigError("probe.kind: the zo study needs 'matvec' (analytic reference)");
    const std::string out = !opt.out_dir.empty() ? opt.out_dir : cfg.output_dir;
    if (out.empty())
        throw ConfigError("output_dir: set it in the config or pass --out");
    prepare_run_dir(out, opt.force);
    stash_configs(opt.config_path, cfg, out);

    const std::uint64_t seed = cfg.train.seed;
    std::ofstream csv(out + "/probe.csv", std::ios::binary);
    if (!csv) throw IoError("cannot open for writing: " + out + "/probe.csv");
    csv << "study,budget,rel_err\n";

    std::vector<std::size_t> budgets = pb.budgets;
    std::sort(budgets.begin(), budgets.end());

    auto report_slope = [&](const std::string& study, const std::vector<double>& errs) {
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < budgets.size(); ++i) {
            lx.push_back(std::log(static_cast<double>(budgets[i])));
            ly.push_back(std::log(errs[i]));
        }
        const double slope = budgets.size() >= 2 ? fit_slope(lx, ly) : 0.0;
        std::cout << "probe " << study << ": slope=" << fmt("%.3f", slope)
                  << " (expect -0.5)\n";
    };

    if (pb.study == "transpose" || pb.study == "all") {
        photonics::BlackBoxConfig bc;
        bc.kind = photonics::layer_kind_from_string(pb.kind);
        bc.d_inp = pb.d_inp;
        bc.d_out = pb.d_out;
        auto layer = photonics::make_black_box(bc);
        RngStream init(seed, "bb-init");
        layer->set_params(photonics::random_params(*layer, init));
        RngStream pr(seed, "probe");

        const std::vector<double> w0 = layer->params();
        std::vector<double> w1 = w0;
        std::vector<double> dw(w1.size());
        pr.fill_normal(dw);
        numlin::axpy(0.1, dw, w1);

        const std::size_t r = std::min<std::size_t>(8, std::min(pb.d_inp, pb.d_out));
        Matrix g(pb.d_out, r);
        pr.fill_normal(g.storage());
        const Matrix u = numlin::qr_thin(g).q;

        const Matrix exact = surrogate::transpose_probe(*layer, w0, w1, u, 1, pr,
                                                        surrogate::TransposeMode::exact);
        const double exact_fn = numlin::frob_norm(exact);
        require(exact_fn > 0.0, "probe: degenerate transpose reference");

        std::vector<double> errs;
        for (std::size_t m : budgets) {
            double acc = 0.0;
            for (std::size_t t = 0; t < pb.trials; ++t) {
                const Matrix est = surrogate::transpose_probe(*layer, w0, w1, u, m, pr);
                acc += numlin::frob_norm(numlin::sub(est, exact)) / exact_fn;
            }
            const double mean = acc / static_cast<double>(pb.trials);
            errs.push_back(mean);
            csv << "transpose," << m << ',' << fmt("%.10g", mean) << '\n';
        }
        report_slope("transpose", errs);
    }

    if (pb.study == "zo" || pb.study == "all") {
        photonics::BlackBoxConfig bc;
        bc.kind = photonics::LayerKind::matvec;
        bc.d_inp = pb.d_inp;
        bc.d_out = pb.d_out;
        auto layer = photonics::make_black_box(bc);
        RngStream init(seed, "bb-init");
        layer->set_params(photonics::random_params(*layer, init));
        RngStream pr(seed, "probe-zo");

        std::vector<double> x(pb.d_inp), v(pb.d_out);
        pr.fill_normal(x);
        pr.fill_normal(v);
        // d<A(w) x, v>/dw_jk = v_j x_k for the reshape map
        std::vector<double> gstar(layer->d_bb());
        for (std::size_t j = 0; j < pb.d_out; ++j)
            for (std::size_t k = 0; k < pb.d_inp; ++k) gstar[j * pb.d_inp + k] = v[j] * x[k];
        const double g_fn = numlin::nrm2(gstar);
        require(g_fn > 0.0, "probe: degenerate zo reference");

        std::vector<double> errs;
        for (std::size_t m : budgets) {
            double acc = 0.0;
            for (std::size_t t = 0; t < pb.trials; ++t) {
                zograd::ZoConfig zc;
                zc.m_bb = m;
                const auto est =
                    zograd::estimate_gradient(*layer, layer->params(), x, v, zc, pr);
                std::vector<double> diff = est.g;
                numlin::axpy(-1.0, gstar, diff);
                acc += numlin::nrm2(diff) / g_fn;
            }
            const double mean = acc / static_cast<double>(pb.trials);
            errs.push_back(mean);
            csv << "zo," << m << ',' << fmt("%.10g", mean) << '\n';
        }
        report_slope("zo", errs);
    }
    std::cout << "probe: wrote " << out << "/probe.csv\n";
    return kExitOk;
}

int cmd_gen_data(const GenDataOptions& opt) {
    if (opt.out.empty()) throw ConfigError("gen-data: --out is required");
    if (fs::exists(opt.out) && !opt.force)
        throw IoError("refusing to overwrite " + opt.out + "; pass --force");
    RngStream stream(opt.seed, "data-gen");
    Dataset ds;
    try {
        ds = gen_dataset(opt.kind, opt.n, opt.noise, stream);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("gen-data: ") + e.what());
    }
    save_dataset_csv(opt.out, ds);
    std::cout << "gen-data " << opt.kind << ": n=" << ds.size() << " -> " << opt.out
              << "\n";
    return kExitOk;
}

int cmd_psi_test(const PsiTestOptions& opt) {
    using surrogate::SurrogateModel;
    using surrogate::TransposeMode;
    bool all_ok = true;
    auto check = [&](bool ok, const std::string& name, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
        all_ok = all_ok && ok;
    };
    RngStream rng(opt.seed, "psi-test");

    auto gaussian = [&](std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        rng.fill_normal(m.storage());
        return m;
    };
    auto low_rank = [&](std::size_t rows, std::size_t cols, std::size_t r) {
        return numlin::scale(numlin::matmul(gaussian(rows, r), gaussian(r, cols)),
                             1.0 / std::sqrt(static_cast<double>(r)));
    };
    auto sm_of = [](const Matrix& a, std::size_t r) {
        auto svd = numlin::svd_trunc(a, r);
        Matrix s(r, r);
        for (std::size_t i = 0; i < r; ++i) s(i, i) = svd.s[i];
        return SurrogateModel{std::move(svd.u), std::move(s), std::move(svd.v)};
    };

    { // exact reconstruction of rank-limited moves
        const std::size_t dout = 24, dinp = 16, r = 5;
        double worst = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            const Matrix a0 = low_rank(dout, dinp, r);
            const Matrix a1 = low_rank(dout, dinp, r);
            photonics::BlackBoxConfig bc;
            bc.d_inp = dinp;
            bc.d_out = dout;
            auto layer = photonics::make_black_box(bc);
            const std::vector<double>& w0 = a0.storage();
            const std::vector<double>& w1 = a1.storage();
            layer->set_params(w0);
            const SurrogateModel next = surrogate::ipsi_update(
                sm_of(a0, r), *layer, w0, w1, 1, rng, TransposeMode::exact);
            worst = std::max(worst, numlin::frob_norm(numlin::sub(next.dense(), a1)) /
                                        numlin::frob_norm(a1));
        }
        check(worst <= 1e-8, "exactness",
              "rank-5 moves reconstructed, worst rel err " + fmt("%.2e", worst));
    }

    { // zero parameter move must leave the product alone (paired probes cancel)
        const std::size_t dout = 20, dinp = 12, r = 4;
        const Matrix a = gaussian(dout, dinp);
        photonics::BlackBoxConfig bc;
        bc.d_inp = dinp;
        bc.d_out = dout;
        auto layer = photonics::make_black_box(bc);
        layer->set_params(a.storage());
        const SurrogateModel sm = sm_of(a, r);
        const SurrogateModel next =
            surrogate::ipsi_update(sm, *layer, a.storage(), a.storage(), 7, rng);
        const double drift = numlin::frob_norm(numlin::sub(next.dense(), sm.dense())) /
                             numlin::frob_norm(sm.dense());
        check(drift <= 1e-10, "zero-increment", "product drift " + fmt("%.2e", drift));
    }

    { // factor orthonormality along a stochastic update chain
        photonics::BlackBoxConfig bc;
        bc.kind = photonics::LayerKind::mrr;
        bc.d_inp = 24;
        bc.d_out = 32;
        auto layer = photonics::make_black_box(bc);
        layer->set_params(photonics::random_params(*layer, rng));
        SurrogateModel sm = surrogate::init_oracle(*layer, 6);
        double worst = 0.0;
        std::vector<double> w0 = layer->params();
        std::vector<double> step(w0.size());
        for (int i = 0; i < 25; ++i) {
            rng.fill_normal(step);
            std::vector<double> w1 = w0;
            numlin::axpy(0.05, step, w1);
            sm = surrogate::ipsi_update(sm, *layer, w0, w1, 20, rng);
            layer->set_params(w1);
            w0 = w1;
            worst = std::max(worst, sm.orth_drift());
        }
        check(worst <= 1e-10, "orthonormality",
              "25 updates, worst drift " + fmt("%.2e", worst));
    }

    { // query cost is exactly 2r + 2*m_sm
        bool ok = true;
        std::string detail;
        for (auto [r, m] : {std::pair<std::size_t, std::size_t>{1, 1}, {3, 10}, {5, 100}}) {
            photonics::BlackBoxConfig bc;
            bc.d_inp = 16;
            bc.d_out = 16;
            auto layer = photonics::make_black_box(bc);
            layer->set_params(random_params(*layer, rng));
            const SurrogateModel sm = sm_of(photonics::materialize(*layer), r);
            std::vector<double> w1 = layer->params();
            w1[0] += 0.1;
            surrogate::PsiBudget budget;
            surrogate::ipsi_update(sm, *layer, layer->params(), w1, m, rng,
                                   TransposeMode::stochastic, &budget);
            ok = ok && budget.queries_spent == 2 * r + 2 * m;
            detail += "(r=" + std::to_string(r) + ",M=" + std::to_string(m) + ")->" +
                      std::to_string(budget.queries_spent) + " ";
        }
        check(ok, "accounting", detail + "expected 2r+2M");
    }

    { // stochastic transpose probe: unbiased, variance as predicted
        const std::size_t dout = 24, dinp = 16, r = 4;
        photonics::BlackBoxConfig bc;
        bc.d_inp = dinp;
        bc.d_out = dout;
        auto layer = photonics::make_black_box(bc);
        layer->set_params(photonics::random_params(*layer, rng));
        const std::vector<double> w0 = layer->params();
        std::vector<double> w1 = w0, dw(w0.size());
        rng.fill_normal(dw);
        numlin::axpy(0.2, dw, w1);
        const Matrix u = numlin::qr_thin(gaussian(dout, r)).q;
        const Matrix exact =
            surrogate::transpose_probe(*layer, w0, w1, u, 1, rng, TransposeMode::exact);
        const double exact2 = std::pow(numlin::frob_norm(exact), 2);

        const std::size_t trials = 100, m = 20;
        const double pred = (static_cast<double>(dinp) + 1.0) / static_cast<double>(m) *
                            exact2;
        Matrix mean(dinp, r);
        double err2_sum = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            const Matrix est = surrogate::transpose_probe(*layer, w0, w1, u, m, rng);
            err2_sum += std::pow(numlin::frob_norm(numlin::sub(est, exact)), 2);
            mean = numlin::add(mean, est);
        }
        mean = numlin::scale(mean, 1.0 / static_cast<double>(trials));
        const double bias2 = std::pow(numlin::frob_norm(numlin::sub(mean, exact)), 2);
        const double ratio = err2_sum / static_cast<double>(trials) / pred;
        const bool ok_bias = bias2 <= 9.0 * pred / static_cast<double>(trials);
        const bool ok_var = ratio >= 0.6 && ratio <= 1.6;
        check(ok_bias && ok_var, "transpose-probe",
              "var ratio " + fmt("%.3f", ratio) + " (expect ~1), bias2/limit " +
                  fmt("%.3f", bias2 / (9.0 * pred / static_cast<double>(trials))));
    }

    std::cout << (all_ok ? "psi-test: all checks passed\n"
                         : "psi-test: FAILURES detected\n");
    return all_ok ? kExitOk : kExitRuntime;
}

} // namespace astralora::cli
