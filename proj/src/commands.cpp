#include "mgtn/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "mgtn/checkpoint.hpp"
#include "mgtn/graph.hpp"
#include "mgtn/rl.hpp"
#include "mgtn/version.hpp"

namespace mgtn {

namespace {

namespace fs = std::filesystem;

// All run outputs go through write-temp-then-rename.
void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failure on " + tmp.string());
    }
    fs::rename(tmp, path);
}

void save_checkpoint_atomic(const fs::path& path, const AgentParams& params) {
    const fs::path tmp = path.string() + ".tmp";
    save_checkpoint(tmp.string(), params);
    fs::rename(tmp, path);
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

PriceSeries load_or_generate_prices(const RunConfig& config) {
    if (config.csv_path) {
        return load_prices(*config.csv_path, config.symbols, config.max_fill_fraction);
    }
    const auto& spec = *config.synthetic;
    PriceSeries series = synth_series(spec.kind, spec.length, spec.seed, spec.noise);
    if (config.symbols != series.symbols) {
        // Synthetic data always covers the fixed nine slots; configs may
        // trade a subset but the mode order must match the generator's.
        throw std::invalid_argument(
            "config: field 'symbols': synthetic data provides the fixed slot list");
    }
    return series;
}

nlohmann::json fill_report_json(const PriceSeries& series, double limit) {
    nlohmann::json per_symbol = nlohmann::json::object();
    for (std::size_t i = 0; i < series.symbols.size(); ++i) {
        per_symbol[series.symbols[i]] = series.fill_counts[i];
    }
    return {{"rows", series.rows()},
            {"filled", series.total_fills()},
            {"limit_fraction", limit},
            {"per_symbol", per_symbol}};
}

} // namespace

Pipeline build_pipeline(const RunConfig& config) {
    config.validate();
    Pipeline p;
    p.prices = load_or_generate_prices(config);
    const ReturnSeries returns = log_returns(p.prices);
    p.stream = std::make_shared<const ReturnTensorStream>(
        build_stream(returns, config.window, config.target, config.return_scale));
    auto [train_env, test_env] = split(p.stream, config.train_fraction);
    p.train_env = std::move(train_env);
    p.test_env = std::move(test_env);

    Adjacency time_adj = config.use_graph_filters ? time_graph(config.window)
                                                  : Adjacency::zeros(config.window);
    Adjacency currency_adj = Adjacency::zeros(config.symbols.size());
    if (config.use_graph_filters && config.carry_table_path) {
        const CarryTable table = load_carry_table(*config.carry_table_path);
        currency_adj = carry_graph(table, config.currencies, config.rescale_carry);
        if (config.normalize_carry) currency_adj = normalize(currency_adj);
    }
    p.adjacencies = {std::move(time_adj), std::move(currency_adj)};
    p.net = make_agent(config.arch, p.adjacencies);
    return p;
}

std::string cmd_train(const RunConfig& config, const nlohmann::json& overrides) {
    Pipeline p = build_pipeline(config);
    fs::create_directories(config.out_dir);

    init_params(p.net.online, config.arch, config.seed);
    sync_target(p.net);

    ReplayBuffer buffer(config.train.replay_capacity);
    AdamState adam = AdamState::create(config.arch, config.train.lr);
    Rng rng(config.seed + 1);

    const std::size_t total_steps =
        config.train.episodes * p.train_env.transition_count();
    std::size_t global_step = 0;

    std::ostringstream episodes_csv;
    episodes_csv << "episode,steps,train_steps,cumulative_reward,mean_loss,epsilon_end\n";
    std::ostringstream curve_csv;
    curve_csv << "global_step,loss\n";
    nlohmann::json episode_meta = nlohmann::json::array();

    for (std::size_t ep = 0; ep < config.train.episodes; ++ep) {
        std::vector<double> losses;
        const std::size_t step_base = global_step;
        const EpisodeReport report =
            run_episode(p.train_env, p.net, buffer, adam, config.train, ep, total_steps,
                        global_step, rng, &losses);
        episodes_csv << ep << ',' << report.steps << ',' << report.train_steps << ','
                     << fmt_double(report.cumulative_reward) << ','
                     << fmt_double(report.mean_loss) << ','
                     << fmt_double(report.epsilon_end) << '\n';
        const std::size_t warmup = report.steps - report.train_steps;
        for (std::size_t i = 0; i < losses.size(); ++i) {
            curve_csv << (step_base + warmup + i) << ',' << fmt_double(losses[i]) << '\n';
        }
        episode_meta.push_back({{"episode", ep},
                                {"steps", report.steps},
                                {"train_steps", report.train_steps},
                                {"cumulative_reward", report.cumulative_reward},
                                {"mean_loss", report.mean_loss},
                                {"epsilon_end", report.epsilon_end}});
        if (config.checkpoint_interval > 0 &&
            (ep + 1) % config.checkpoint_interval == 0 &&
            ep + 1 < config.train.episodes) {
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint_ep%03zu.ckpt", ep + 1);
            save_checkpoint_atomic(fs::path(config.out_dir) / name, p.net.online);
        }
    }

    save_checkpoint_atomic(fs::path(config.out_dir) / "checkpoint_final.ckpt",
                           p.net.online);
    write_file_atomic(fs::path(config.out_dir) / "episodes.csv", episodes_csv.str());
    write_file_atomic(fs::path(config.out_dir) / "training_curve.csv", curve_csv.str());
    write_file_atomic(fs::path(config.out_dir) / "fill_report.json",
                      fill_report_json(p.prices, config.max_fill_fraction).dump(2) + "\n");

    nlohmann::json manifest = {{"manifest_version", 1},
                               {"code_version", kCodeVersion},
                               {"seed", config.seed},
                               {"param_count", param_count(config.arch)},
                               {"overrides", overrides},
                               {"config", run_config_to_json(config)},
                               {"episodes", episode_meta}};
    write_file_atomic(fs::path(config.out_dir) / "manifest.json",
                      manifest.dump(2) + "\n");
    return config.out_dir;
}

nlohmann::json metric_report_to_json(const MetricReport& report) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"total_return_pct", report.total_return_pct},
            {"sharpe", opt(report.sharpe)},
            {"sortino", opt(report.sortino)},
            {"max_drawdown_pct", report.max_drawdown_pct},
            {"hit_rate_pct", opt(report.hit_rate_pct)}};
}

BacktestResult cmd_backtest(const RunConfig& config, const std::string& checkpoint_path) {
    Pipeline p = build_pipeline(config);
    load_checkpoint_into(checkpoint_path, p.net.online);
    sync_target(p.net);
    fs::create_directories(config.out_dir);

    BacktestResult result;
    TradingEnv& env = p.test_env;
    env.reset();
    while (!env.terminal()) {
        const auto q = agent_forward(p.net, p.net.online, env.state());
        const auto step = env.step(greedy_action(q));
        result.rewards.push_back(step.reward);
    }
    result.steps = result.rewards.size();

    const EquityCurve curve(result.rewards);
    result.report = compute_metrics(curve);

    nlohmann::json report_json = metric_report_to_json(result.report);
    report_json["steps"] = result.steps;
    report_json["initial_capital"] = curve.initial_capital;
    report_json["checkpoint"] = checkpoint_path;
    report_json["target"] = config.target;
    report_json["code_version"] = kCodeVersion;
    write_file_atomic(fs::path(config.out_dir) / "backtest_report.json",
                      report_json.dump(2) + "\n");

    const auto equity = curve.equity();
    std::ostringstream equity_csv;
    equity_csv << "timestamp,equity\n";
    const auto& first_sample = env.stream().samples[env.first_sample()];
    equity_csv << format_timestamp(first_sample.state_last_ts) << ','
               << fmt_double(equity[0]) << '\n';
    for (std::size_t k = 0; k < result.steps; ++k) {
        equity_csv << format_timestamp(env.reward_timestamp(k)) << ','
                   << fmt_double(equity[k + 1]) << '\n';
    }
    write_file_atomic(fs::path(config.out_dir) / "equity.csv", equity_csv.str());
    return result;
}

void cmd_synth(SynthKind kind, std::size_t length, std::uint64_t seed, double noise,
               const std::string& out_path) {
    const PriceSeries series = synth_series(kind, length, seed, noise);
    const fs::path path(out_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = out_path + ".tmp";
    write_prices_csv(tmp.string(), series);
    fs::rename(tmp, out_path);
}

std::string cmd_inspect(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::invalid_argument("inspect: cannot open " + path);
    char magic[8] = {};
    probe.read(magic, sizeof(magic));
    probe.close();

    std::ostringstream out;
    if (std::string_view(magic, 8) == "MGTNCKP1") {
        const auto arrays = load_checkpoint(path);
        out << "checkpoint " << path << "\n";
        std::size_t total = 0;
        for (const auto& a : arrays) {
            out << "  " << a.name << "  shape(";
            for (std::size_t k = 0; k < a.value.order(); ++k) {
                out << (k ? "," : "") << a.value.dim(k);
            }
            out << ")  params " << a.value.size() << "\n";
            total += a.value.size();
        }
        out << "  total trainable parameters: " << total << "\n";
        return out.str();
    }

    // Otherwise expect a carry table document.
    CarryTable table;
    try {
        table = load_carry_table(path);
    } catch (const std::exception& e) {
        throw std::invalid_argument("inspect: " + path +
                                    " is neither a checkpoint nor a carry table (" +
                                    e.what() + ")");
    }
    out << "carry table " << path << "\n";
    std::size_t edges = 0;
    for (const auto& [pair, rates] : table.pairs) {
        if (rates.spot <= 0.0 || rates.forward <= 0.0) {
            throw std::invalid_argument("inspect: nonpositive rate for " + pair);
        }
        const double w = std::abs(1.0 - rates.forward / rates.spot);
        if (w > 0.0) {
            out << "  " << pair << "  spot " << rates.spot << "  forward "
                << rates.forward << "  weight " << fmt_double(w) << "\n";
            ++edges;
        }
    }
    out << "  edges: " << edges << "\n";
    return out.str();
}

} // namespace mgtn
