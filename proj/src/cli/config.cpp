#include "astralora/cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include <json.hpp>

#include "astralora/errors.hpp"
#include "astralora/photonics/models.hpp"

namespace astralora::cli {

using nlohmann::json;
using trainer::NetSpec;
using trainer::TrainConfig;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

const json& member(const json& obj, const std::string& path, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing required field");
    return *it;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!ok.count(it.key())) fail(path, "unknown key '" + it.key() + "'");
}

std::uint64_t as_uint(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        fail(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

template <typename T>
std::vector<T> as_uint_array(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(static_cast<T>(as_uint(v[i], path + "[" + std::to_string(i) + "]")));
    return out;
}

DataBlock parse_data(const json& j) {
    check_keys(j, "data", {"kind", "path", "n", "noise", "test_fraction"});
    DataBlock d;
    if (j.contains("kind")) d.kind = as_string(j["kind"], "data.kind");
    if (j.contains("path")) d.path = as_string(j["path"], "data.path");
    if (d.kind.empty() == d.path.empty())
        fail("data", "exactly one of 'kind' and 'path' is required");
    if (!d.kind.empty() && d.kind != "spirals" && d.kind != "blobs" && d.kind != "xor-grid")
        fail("data.kind", "unknown dataset kind '" + d.kind + "'");
    if (j.contains("n")) d.n = as_uint(j["n"], "data.n");
    if (!d.kind.empty() && (d.n < 2 || d.n % 2 != 0))
        fail("data.n", "must be even and >= 2");
    if (j.contains("noise")) d.noise = as_double(j["noise"], "data.noise");
    if (d.noise < 0.0) fail("data.noise", "must be >= 0");
    if (j.contains("test_fraction"))
        d.test_fraction = as_double(j["test_fraction"], "data.test_fraction");
    if (d.test_fraction < 0.0 || d.test_fraction >= 1.0)
        fail("data.test_fraction", "must lie in [0, 1)");
    return d;
}

photonics::BlackBoxConfig parse_black_box(const json& j) {
    check_keys(j, "black_box", {"kind", "d_inp", "d_out", "mrr_a", "mrr_r"});
    photonics::BlackBoxConfig bb;
    const std::string kind = as_string(member(j, "black_box", "kind"), "black_box.kind");
    try {
        bb.kind = photonics::layer_kind_from_string(kind);
    } catch (const std::invalid_argument& e) {
        fail("black_box.kind", e.what());
    }
    bb.d_inp = as_uint(member(j, "black_box", "d_inp"), "black_box.d_inp");
    bb.d_out = as_uint(member(j, "black_box", "d_out"), "black_box.d_out");
    if (bb.d_inp < 1) fail("black_box.d_inp", "must be >= 1");
    if (bb.d_out < 1) fail("black_box.d_out", "must be >= 1");
    if (bb.kind == photonics::LayerKind::monarch) {
        if (!photonics::is_pow2(bb.d_inp)) fail("black_box.d_inp", "monarch needs a power of two");
        if (!photonics::is_pow2(bb.d_out)) fail("black_box.d_out", "monarch needs a power of two");
    }
    if (j.contains("mrr_a")) bb.mrr_a = as_double(j["mrr_a"], "black_box.mrr_a");
    if (j.contains("mrr_r")) bb.mrr_r = as_double(j["mrr_r"], "black_box.mrr_r");
    if (bb.mrr_a <= 0.0 || bb.mrr_a >= 1.0) fail("black_box.mrr_a", "must lie in (0, 1)");
    if (bb.mrr_r <= 0.0 || bb.mrr_r >= 1.0) fail("black_box.mrr_r", "must lie in (0, 1)");
    return bb;
}

NetSpec parse_network(const json& j, const std::optional<photonics::BlackBoxConfig>& bb) {
    if (!j.is_array() || j.empty()) fail("network", "expected a non-empty array of layers");
    NetSpec spec;
    std::size_t cur = 0; // output width so far; 0 = undetermined
    bool has_blackbox = false;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = "network[" + std::to_string(i) + "]";
        const json& item = j[i];
        if (!item.is_object()) fail(path, "expected an object");
        const std::string type = as_string(member(item, path, "type"), path + ".type");
        NetSpec::Item it;
        if (type == "dense") {
            check_keys(item, path, {"type", "in", "out"});
            it.type = NetSpec::Item::Type::dense;
            it.in = as_uint(member(item, path, "in"), path + ".in");
            it.out = as_uint(member(item, path, "out"), path + ".out");
            if (it.in < 1 || it.out < 1) fail(path, "dense dims must be >= 1");
            if (cur != 0 && it.in != cur)
                fail(path + ".in", "does not match preceding layer width " +
                                       std::to_string(cur));
            cur = it.out;
        } else if (type == "relu" || type == "gelu") {
            check_keys(item, path, {"type"});
            it.type = type == "relu" ? NetSpec::Item::Type::relu : NetSpec::Item::Type::gelu;
            if (cur == 0) fail(path, type + " needs a preceding layer to set its width");
            it.in = it.out = cur;
        } else if (type == "blackbox") {
            check_keys(item, path, {"type"});
            if (!bb) fail(path, "blackbox layer requires a black_box block");
            if (has_blackbox) fail(path, "only one blackbox layer is supported");
            has_blackbox = true;
            it.type = NetSpec::Item::Type::blackbox;
            it.in = bb->d_inp;
            it.out = bb->d_out;
            if (cur != 0 && it.in != cur)
                fail("black_box.d_inp", "does not match preceding layer width " +
                                            std::to_string(cur));
            cur = it.out;
        } else {
            fail(path + ".type", "unknown layer type '" + type + "'");
        }
        spec.items.push_back(it);
    }
    if (bb && !has_blackbox)
        fail("network", "black_box block present but no blackbox layer in the chain");
    return spec;
}

TrainConfig parse_train(const json& j) {
    check_keys(j, "train",
               {"steps", "batch", "eta", "eta_bb", "mu", "m_bb", "m_sm", "rank", "sm_init",
                "oversample", "share_directions", "seed", "eval_every", "sm_error_every",
                "timing"});
    TrainConfig t;
    if (j.contains("steps")) t.steps = as_uint(j["steps"], "train.steps");
    if (t.steps < 1) fail("train.steps", "must be >= 1");
    if (j.contains("batch")) t.batch = as_uint(j["batch"], "train.batch");
    if (t.batch < 1) fail("train.batch", "must be >= 1");
    if (j.contains("eta")) t.eta = as_double(j["eta"], "train.eta");
    if (!(t.eta > 0.0)) fail("train.eta", "must be > 0");
    if (j.contains("eta_bb")) t.eta_bb = as_double(j["eta_bb"], "train.eta_bb");
    if (t.eta_bb < 0.0) fail("train.eta_bb", "must be >= 0");
    if (j.contains("mu")) t.mu = as_double(j["mu"], "train.mu");
    if (!(t.mu > 0.0)) fail("train.mu", "must be > 0");
    if (j.contains("m_bb")) t.m_bb = as_uint(j["m_bb"], "train.m_bb");
    if (t.m_bb < 1) fail("train.m_bb", "must be >= 1");
    if (j.contains("m_sm")) t.m_sm = as_uint(j["m_sm"], "train.m_sm");
    if (t.m_sm < 1) fail("train.m_sm", "must be >= 1");
    if (j.contains("rank")) t.rank = as_uint(j["rank"], "train.rank");
    if (t.rank < 1) fail("train.rank", "must be >= 1");
    if (j.contains("sm_init")) {
        const std::string s = as_string(j["sm_init"], "train.sm_init");
        if (s == "oracle")
            t.sm_init = TrainConfig::SmInit::oracle;
        else if (s == "sketch")
            t.sm_init = TrainConfig::SmInit::sketch;
        else
            fail("train.sm_init", "expected 'oracle' or 'sketch'");
    }
    if (j.contains("oversample")) t.oversample = as_uint(j["oversample"], "train.oversample");
    if (j.contains("share_directions"))
        t.share_directions = as_bool(j["share_directions"], "train.share_directions");
    if (j.contains("seed")) t.seed = as_uint(j["seed"], "train.seed");
    if (j.contains("eval_every")) t.eval_every = as_uint(j["eval_every"], "train.eval_every");
    if (j.contains("sm_error_every"))
        t.sm_error_every = as_uint(j["sm_error_every"], "train.sm_error_every");
    if (j.contains("timing")) t.timing = as_bool(j["timing"], "train.timing");
    return t;
}

SweepBlock parse_sweep(const json& j) {
    check_keys(j, "sweep", {"ranks", "budgets", "seeds"});
    SweepBlock s;
    s.ranks = as_uint_array<std::size_t>(member(j, "sweep", "ranks"), "sweep.ranks");
    s.budgets = as_uint_array<std::size_t>(member(j, "sweep", "budgets"), "sweep.budgets");
    s.seeds = as_uint_array<std::uint64_t>(member(j, "sweep", "seeds"), "sweep.seeds");
    for (std::size_t r : s.ranks)
        if (r < 1) fail("sweep.ranks", "entries must be >= 1");
    for (std::size_t b : s.budgets)
        if (b < 1) fail("sweep.budgets", "entries must be >= 1");
    return s;
}

ProbeBlock parse_probe(const json& j) {
    check_keys(j, "probe", {"study", "kind", "d_inp", "d_out", "budgets", "trials"});
    ProbeBlock p;
    if (j.contains("study")) p.study = as_string(j["study"], "probe.study");
    if (p.study != "transpose" && p.study != "zo" && p.study != "all")
        fail("probe.study", "expected 'transpose', 'zo' or 'all'");
    if (j.contains("kind")) p.kind = as_string(j["kind"], "probe.kind");
    try {
        photonics::layer_kind_from_string(p.kind);
    } catch (const std::invalid_argument& e) {
        fail("probe.kind", e.what());
    }
    if (j.contains("d_inp")) p.d_inp = as_uint(j["d_inp"], "probe.d_inp");
    if (j.contains("d_out")) p.d_out = as_uint(j["d_out"], "probe.d_out");
    if (p.d_inp < 1 || p.d_out < 1) fail("probe", "dims must be >= 1");
    if (j.contains("budgets"))
        p.budgets = as_uint_array<std::size_t>(j["budgets"], "probe.budgets");
    for (std::size_t b : p.budgets)
        if (b < 1) fail("probe.budgets", "entries must be >= 1");
    if (j.contains("trials")) p.trials = as_uint(j["trials"], "probe.trials");
    if (p.trials < 1) fail("probe.trials", "must be >= 1");
    return p;
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
    check_keys(j, "config",
               {"experiment", "output_dir", "data", "network", "black_box", "train",
                "sweep", "probe"});

    RunConfig cfg;
    cfg.experiment = as_string(member(j, "config", "experiment"), "experiment");
    if (cfg.experiment.empty()) fail("experiment", "must not be empty");
    if (j.contains("output_dir"))
        cfg.output_dir = as_string(j["output_dir"], "output_dir");
    cfg.data = parse_data(member(j, "config", "data"));
    if (j.contains("black_box")) cfg.black_box = parse_black_box(j["black_box"]);
    cfg.net = parse_network(member(j, "config", "network"), cfg.black_box);
    if (j.contains("train")) cfg.train = parse_train(j["train"]);

    if (cfg.black_box) {
        const std::size_t cap = std::min(cfg.black_box->d_inp, cfg.black_box->d_out);
        if (cfg.train.rank > cap)
            fail("train.rank", "exceeds min(black_box.d_inp, black_box.d_out) = " +
                                   std::to_string(cap));
    }
    if (j.contains("sweep")) cfg.sweep = parse_sweep(j["sweep"]);
    if (j.contains("probe")) cfg.probe = parse_probe(j["probe"]);
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path);
}

std::string resolved_config_json(const RunConfig& cfg) {
    json j;
    j["experiment"] = cfg.experiment;
    if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir;
    json d;
    if (!cfg.data.kind.empty()) {
        d["kind"] = cfg.data.kind;
        d["n"] = cfg.data.n;
        d["noise"] = cfg.data.noise;
    } else {
        d["path"] = cfg.data.path;
    }
    d["test_fraction"] = cfg.data.test_fraction;
    j["data"] = d;

    json net = json::array();
    for (const auto& it : cfg.net.items) {
        using Type = trainer::NetSpec::Item::Type;
        json l;
        switch (it.type) {
            case Type::dense: l["type"] = "dense"; l["in"] = it.in; l["out"] = it.out; break;
            case Type::relu: l["type"] = "relu"; break;
            case Type::gelu: l["type"] = "gelu"; break;
            case Type::blackbox: l["type"] = "blackbox"; break;
        }
        net.push_back(l);
    }
    j["network"] = net;

    if (cfg.black_box) {
        json b;
        b["kind"] = photonics::to_string(cfg.black_box->kind);
        b["d_inp"] = cfg.black_box->d_inp;
        b["d_out"] = cfg.black_box->d_out;
        if (cfg.black_box->kind == photonics::LayerKind::mrr) {
            b["mrr_a"] = cfg.black_box->mrr_a;
            b["mrr_r"] = cfg.black_box->mrr_r;
        }
        j["black_box"] = b;
    }

    json t;
    t["steps"] = cfg.train.steps;
    t["batch"] = cfg.train.batch;
    t["eta"] = cfg.train.eta;
    t["eta_bb"] = cfg.train.eta_bb;
    t["mu"] = cfg.train.mu;
    t["m_bb"] = cfg.train.m_bb;
    t["m_sm"] = cfg.train.m_sm;
    t["rank"] = cfg.train.rank;
    t["sm_init"] = cfg.train.sm_init == TrainConfig::SmInit::oracle ? "oracle" : "sketch";
    t["oversample"] = cfg.train.oversample;
    t["share_directions"] = cfg.train.share_directions;
    t["seed"] = cfg.train.seed;
    t["eval_every"] = cfg.train.eval_every;
    t["sm_error_every"] = cfg.train.sm_error_every;
    t["timing"] = cfg.train.timing;
    j["train"] = t;

    if (cfg.sweep) {
        json s;
        s["ranks"] = cfg.sweep->ranks;
        s["budgets"] = cfg.sweep->budgets;
        s["seeds"] = cfg.sweep->seeds;
        j["sweep"] = s;
    }
    if (cfg.probe) {
        json p;
        p["study"] = cfg.probe->study;
        p["kind"] = cfg.probe->kind;
        p["d_inp"] = cfg.probe->d_inp;
        p["d_out"] = cfg.probe->d_out;
        p["budgets"] = cfg.probe->budgets;
        p["trials"] = cfg.probe->trials;
        j["probe"] = p;
    }
    return j.dump(2) + "\n";
}

} // namespace astralora::cli
