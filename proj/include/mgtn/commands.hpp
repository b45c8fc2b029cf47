#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtn/config.hpp"
#include "mgtn/env.hpp"
#include "mgtn/layers.hpp"
#include "mgtn/metrics.hpp"

namespace mgtn {

// Everything a run needs, assembled from one config: data stream, split
// environments, the fixed graphs, and a zero-parameter agent.
struct Pipeline {
    PriceSeries prices;
    std::shared_ptr<const ReturnTensorStream> stream;
    TradingEnv train_env;
    TradingEnv test_env;
    std::vector<Adjacency> adjacencies; // time graph, currency graph
    AgentNetwork net;
};

Pipeline build_pipeline(const RunConfig& config);

// Trains per the config and writes manifest, per-episode metrics CSV,
// training-curve CSV, checkpoints and the fill report into config.out_dir.
// Returns the run directory. `overrides` records command-line overrides in
// the manifest.
std::string cmd_train(const RunConfig& config,
                      const nlohmann::json& overrides = nlohmann::json::object());

struct BacktestResult {
    MetricReport report;
    std::vector<double> rewards;
    std::size_t steps = 0;
};

// Greedy (epsilon = 0) rollout of a checkpoint over the test split; writes
// the metric report and equity curve CSV. Never mutates parameters.
BacktestResult cmd_backtest(const RunConfig& config, const std::string& checkpoint_path);

// Materializes a synthetic series to the price CSV format.
void cmd_synth(SynthKind kind, std::size_t length, std::uint64_t seed, double noise,
               const std::string& out_path);

// Human-readable summary of a checkpoint or a carry table file.
std::string cmd_inspect(const std::string& path);

nlohmann::json metric_report_to_json(const MetricReport& report);

} // namespace mgtn
