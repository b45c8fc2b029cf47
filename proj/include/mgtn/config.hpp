#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtn/env.hpp"
#include "mgtn/layers.hpp"
#include "mgtn/rl.hpp"

namespace mgtn {

struct SyntheticSpec {
    SynthKind kind = SynthKind::RandomWalk;
    std::size_t length = 0;
    std::uint64_t seed = 0;
    double noise = 0.0;
};

// One structured document drives a whole run; command-line flags may
// override scalar fields and the overrides are recorded in the manifest.
// All process randomness flows from the single `seed`.
struct RunConfig {
    // data source: exactly one of the two
    std::optional<std::string> csv_path;
    std::optional<SyntheticSpec> synthetic;

    std::vector<std::string> symbols;    // data pair codes; fixes the I_2 order
    std::vector<std::string> currencies; // carry-graph nodes, index-aligned
    std::string target;                  // traded pair

    std::optional<std::string> carry_table_path;
    bool normalize_carry = false;
    bool rescale_carry = false;
    bool use_graph_filters = true; // false: identity filters (TTNN-style agent)
    double max_fill_fraction = 0.05;

    std::size_t window = 30; // I_1 lags
    double train_fraction = 7.0 / 9.0;
    // Multiplies state features only (rewards stay raw log-returns);
    // 1.0 = off. Minute-scale returns leave ReLU pre-activations far below
    // the Adam step size, so desk configs typically set this to ~1e3.
    double return_scale = 1.0;

    AgentConfig arch;
    TrainConfig train;
    std::size_t checkpoint_interval = 5; // episodes; 0 = final only

    std::string out_dir = "run";
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir);

// Loads a config document; a manifest (object with "manifest_version" and
// an embedded "config") is accepted and unwrapped, so a run can be
// reproduced directly from its manifest.
RunConfig load_run_config(const std::string& path);

} // namespace mgtn
