#include "mgtn/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace mgtn {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw std::invalid_argument("config: field '" + field + "': " + what);
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(key, "wrong type");
    }
}

template <typename T>
T require(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) fail(key, "missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(key, "wrong type");
    }
}

std::string resolve(const std::string& path, const std::string& base_dir) {
    fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

} // namespace

void RunConfig::validate() const {
    if (csv_path.has_value() == synthetic.has_value()) {
        fail("data", "exactly one of csv or synthetic is required");
    }
    if (csv_path && !fs::exists(*csv_path)) fail("data.csv", "file not found: " + *csv_path);
    if (symbols.empty()) fail("symbols", "must list at least one pair");
    std::set<std::string> seen;
    for (const auto& s : symbols) {
        if (s.size() != 6) fail("symbols", "pair code must be 6 letters: " + s);
        if (!seen.insert(s).second) fail("symbols", "duplicate pair " + s);
    }
    if (currencies.size() != symbols.size()) {
        fail("currencies", "must align one-to-one with symbols");
    }
    std::set<std::string> cseen;
    for (const auto& c : currencies) {
        if (c.size() != 3) fail("currencies", "currency code must be 3 letters: " + c);
        if (!cseen.insert(c).second) fail("currencies", "duplicate currency " + c);
    }
    if (seen.find(target) == seen.end()) {
        fail("target", "not in symbols: " + target);
    }
    if (carry_table_path && !fs::exists(*carry_table_path)) {
        fail("carry_table", "file not found: " + *carry_table_path);
    }
    if (window < 1) fail("window", "must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        fail("train_fraction", "must be in (0,1)");
    }
    if (!(return_scale > 0.0)) fail("return_scale", "must be positive");
    if (!(max_fill_fraction >= 0.0 && max_fill_fraction <= 1.0)) {
        fail("max_fill_fraction", "must be in [0,1]");
    }
    if (synthetic && synthetic->length < window + 2) {
        fail("data.synthetic.length", "too short for the window");
    }
    if (out_dir.empty()) fail("out_dir", "must not be empty");
    try {
        arch.validate();
    } catch (const std::exception& e) {
        fail("arch", e.what());
    }
    if (arch.input_features != kFeatureCount) fail("arch", "input features must be 4");
    if (arch.graph_dims.size() != 2 || arch.graph_dims[0] != window ||
        arch.graph_dims[1] != symbols.size()) {
        fail("arch", "graph dims must be (window, symbol count)");
    }
    try {
        train.validate();
    } catch (const std::exception& e) {
        fail("train", e.what());
    }
}

nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    if (c.csv_path) {
        j["data"] = {{"csv", *c.csv_path}};
    } else if (c.synthetic) {
        j["data"] = {{"synthetic",
                      {{"kind", synth_kind_name(c.synthetic->kind)},
                       {"length", c.synthetic->length},
                       {"seed", c.synthetic->seed},
                       {"noise", c.synthetic->noise}}}};
    }
    j["symbols"] = c.symbols;
    j["currencies"] = c.currencies;
    j["target"] = c.target;
    if (c.carry_table_path) j["carry_table"] = *c.carry_table_path;
    j["normalize_carry"] = c.normalize_carry;
    j["rescale_carry"] = c.rescale_carry;
    j["use_graph_filters"] = c.use_graph_filters;
    j["max_fill_fraction"] = c.max_fill_fraction;
    j["window"] = c.window;
    j["train_fraction"] = c.train_fraction;
    j["return_scale"] = c.return_scale;
    j["arch"] = {{"hidden_features", c.arch.hidden_features},
                 {"tt_in_modes", c.arch.tt_in_modes},
                 {"tt_out_modes", c.arch.tt_out_modes},
                 {"tt_ranks", c.arch.tt_ranks}};
    j["train"] = {{"episodes", c.train.episodes},
                  {"batch_size", c.train.batch_size},
                  {"gamma", c.train.gamma},
                  {"lr", c.train.lr},
                  {"eps_start", c.train.eps_start},
                  {"eps_end", c.train.eps_end},
                  {"eps_decay_fraction", c.train.eps_decay_fraction},
                  {"replay_capacity", c.train.replay_capacity},
                  {"target_update_episodes", c.train.target_update_episodes},
                  {"target_mode", target_mode_name(c.train.target_mode)}};
    j["checkpoint_interval"] = c.checkpoint_interval;
    j["out_dir"] = c.out_dir;
    j["seed"] = c.seed;
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir) {
    RunConfig c;
    if (!j.contains("data") || !j.at("data").is_object()) fail("data", "missing");
    const auto& data = j.at("data");
    if (data.contains("csv")) {
        c.csv_path = resolve(data.at("csv").get<std::string>(), base_dir);
    }
    if (data.contains("synthetic")) {
        const auto& s = data.at("synthetic");
        SyntheticSpec spec;
        spec.kind = parse_synth_kind(require<std::string>(s, "kind"));
        spec.length = require<std::size_t>(s, "length");
        spec.seed = require<std::uint64_t>(s, "seed");
        spec.noise = get_or<double>(s, "noise", 0.0);
        c.synthetic = spec;
    }

    c.symbols = get_or<std::vector<std::string>>(j, "symbols", synth_symbols());
    if (j.contains("currencies")) {
        c.currencies = j.at("currencies").get<std::vector<std::string>>();
    } else {
        for (const auto& s : c.symbols) {
            c.currencies.push_back(s.size() >= 3 ? s.substr(0, 3) : s);
        }
    }
    c.target = require<std::string>(j, "target");
    if (j.contains("carry_table")) {
        c.carry_table_path = resolve(j.at("carry_table").get<std::string>(), base_dir);
    }
    c.normalize_carry = get_or<bool>(j, "normalize_carry", false);
    c.rescale_carry = get_or<bool>(j, "rescale_carry", false);
    c.use_graph_filters = get_or<bool>(j, "use_graph_filters", true);
    c.max_fill_fraction = get_or<double>(j, "max_fill_fraction", 0.05);
    c.window = get_or<std::size_t>(j, "window", 30);
    c.train_fraction = get_or<double>(j, "train_fraction", 7.0 / 9.0);
    c.return_scale = get_or<double>(j, "return_scale", 1.0);

    c.arch.input_features = kFeatureCount;
    c.arch.graph_dims = {c.window, c.symbols.size()};
    if (j.contains("arch")) {
        const auto& a = j.at("arch");
        c.arch.hidden_features = get_or<std::size_t>(a, "hidden_features", 16);
        c.arch.tt_in_modes = get_or<std::vector<std::size_t>>(
            a, "tt_in_modes", {c.arch.hidden_features, c.window, c.symbols.size()});
        c.arch.tt_out_modes =
            get_or<std::vector<std::size_t>>(a, "tt_out_modes", {3, 3, 3});
        c.arch.tt_ranks = get_or<std::vector<std::size_t>>(a, "tt_ranks", {1, 2, 2, 1});
    } else {
        c.arch.hidden_features = 16;
        c.arch.tt_in_modes = {16, c.window, c.symbols.size()};
        c.arch.tt_out_modes = {3, 3, 3};
        c.arch.tt_ranks = {1, 2, 2, 1};
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        c.train.episodes = get_or<std::size_t>(t, "episodes", 15);
        c.train.batch_size = get_or<std::size_t>(t, "batch_size", 64);
        c.train.gamma = get_or<double>(t, "gamma", 0.9);
        c.train.lr = get_or<double>(t, "lr", 2e-4);
        c.train.eps_start = get_or<double>(t, "eps_start", 1.0);
        c.train.eps_end = get_or<double>(t, "eps_end", 0.1);
        c.train.eps_decay_fraction = get_or<double>(t, "eps_decay_fraction", 0.8);
        c.train.replay_capacity = get_or<std::size_t>(t, "replay_capacity", 10000);
        c.train.target_update_episodes =
            get_or<std::size_t>(t, "target_update_episodes", 1);
        c.train.target_mode =
            parse_target_mode(get_or<std::string>(t, "target_mode", "paper-literal"));
    }
    c.checkpoint_interval = get_or<std::size_t>(j, "checkpoint_interval", 5);
    c.out_dir = get_or<std::string>(j, "out_dir", "run");
    if (!j.contains("seed")) fail("seed", "missing (seeds are mandatory)");
    c.seed = require<std::uint64_t>(j, "seed");
    c.train.seed = c.seed;
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config: parse error in " + path + ": " + e.what());
    }
    const std::string base_dir = std::filesystem::path(path).parent_path().string();
    if (j.contains("manifest_version") && j.contains("config")) {
        // Manifests embed resolved paths; no further base-dir resolution.
        return run_config_from_json(j.at("config"), "");
    }
    return run_config_from_json(j, base_dir);
}

} // namespace mgtn
