#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "mgtn/commands.hpp"
#include "mgtn/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

} // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
    // Training churns through multi-MB tensor buffers; keep them on the
    // heap instead of mmap so the pages recycle without faulting.
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
    CLI::App app{"Multi-graph tensor-network trading agent"};
    app.set_version_flag("--version", std::string(mgtn::kCodeVersion));
    app.require_subcommand(1);

    // train
    std::string train_config_path, train_out;
    std::uint64_t train_seed = 0;
    bool has_seed = false;
    auto* train = app.add_subcommand("train", "Train an agent from a config or manifest");
    train->add_option("--config", train_config_path, "Config or manifest JSON")
        ->required();
    auto* seed_opt = train->add_option("--seed", train_seed, "Override the config seed");
    train->add_option("--out", train_out, "Override the output directory");

    // backtest
    std::string bt_config_path, bt_checkpoint;
    auto* backtest =
        app.add_subcommand("backtest", "Greedy rollout of a checkpoint on the test split");
    backtest->add_option("--config", bt_config_path, "Config or manifest JSON")
        ->required();
    backtest->add_option("--checkpoint", bt_checkpoint, "Parameter checkpoint")
        ->required();

    // synth
    std::string synth_kind = "random-walk", synth_out;
    std::size_t synth_length = 0;
    std::uint64_t synth_seed = 0;
    double synth_noise = 0.0;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic price CSV");
    synth->add_option("--kind", synth_kind, "momentum | alternating | random-walk");
    synth->add_option("--length", synth_length, "Number of minutes")->required();
    synth->add_option("--seed", synth_seed, "Generator seed")->required();
    synth->add_option("--noise", synth_noise, "Noise scale for the correlated copies");
    synth->add_option("--out", synth_out, "Output CSV path")->required();

    // inspect
    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "Summarize a checkpoint or carry table");
    inspect->add_option("path", inspect_path, "File to inspect")->required();

    CLI11_PARSE(app, argc, argv);
    has_seed = seed_opt->count() > 0;

    try {
        if (*train) {
            mgtn::RunConfig config = mgtn::load_run_config(train_config_path);
            nlohmann::json overrides = nlohmann::json::object();
            if (has_seed) {
                config.seed = train_seed;
                config.train.seed = train_seed;
                overrides["seed"] = train_seed;
            }
            if (!train_out.empty()) {
                config.out_dir = train_out;
                overrides["out_dir"] = train_out;
            }
            const std::string dir = mgtn::cmd_train(config, overrides);
            std::cout << "run directory: " << dir << "\n";
        } else if (*backtest) {
            mgtn::RunConfig config = mgtn::load_run_config(bt_config_path);
            const auto result = mgtn::cmd_backtest(config, bt_checkpoint);
            std::cout << mgtn::metric_report_to_json(result.report).dump(2) << "\n";
        } else if (*synth) {
            mgtn::cmd_synth(mgtn::parse_synth_kind(synth_kind), synth_length, synth_seed,
                            synth_noise, synth_out);
            std::cout << "wrote " << synth_out << "\n";
        } else if (*inspect) {
            std::cout << mgtn::cmd_inspect(inspect_path);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
