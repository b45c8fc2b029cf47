#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mgtn/env.hpp"
#include "mgtn/layers.hpp"
#include "mgtn/rng.hpp"

namespace mgtn {

struct Experience {
    DenseTensor state;
    Action action = Action::Buy;
    double reward = 0.0;
    DenseTensor next_state;
    bool terminal = false;
};

// Fixed-capacity ring of past transitions with uniform sampling (without
// replacement inside a batch).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Experience e);
    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }

    // Indices of a uniform batch; caller resolves them via get().
    std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;
    const Experience& get(std::size_t index) const { return storage_[index]; }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Experience> storage_;
};

// Bias-corrected Adam over the agent's parameter arrays.
struct AdamState {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    AgentParams m; // first moments, shape-matched to the parameters
    AgentParams v; // second moments

    static AdamState create(const AgentConfig& config, double lr = 2e-4);
};

void adam_step(AdamState& adam, AgentParams& params, const GradientSet& grads);

enum class TargetMode { PaperLiteral, Decoupled };
TargetMode parse_target_mode(const std::string& name);
std::string target_mode_name(TargetMode mode);

struct TrainConfig {
    std::size_t episodes = 15;
    std::size_t batch_size = 64;
    double gamma = 0.9;
    double lr = 2e-4;
    double eps_start = 1.0;
    double eps_end = 0.1;
    double eps_decay_fraction = 0.8; // of total env steps
    std::size_t replay_capacity = 10000;
    std::size_t target_update_episodes = 1;
    TargetMode target_mode = TargetMode::PaperLiteral;
    std::uint64_t seed = 0;

    void validate() const;
};

// Linear schedule from eps_start to eps_end over the first
// eps_decay_fraction of total steps, then constant.
double epsilon_at(const TrainConfig& config, std::size_t global_step,
                  std::size_t total_steps);

// Epsilon-greedy over the two action values; ties break toward Buy.
Action select_action(const AgentNetwork& net, const DenseTensor& state, double epsilon,
                     Rng& rng);
Action greedy_action(const std::array<double, 2>& q);

// Bellman targets, treated as constants. PaperLiteral takes the max over
// the target network; Decoupled evaluates the target network at the online
// argmax.
std::vector<double> bellman_targets(const AgentNetwork& net,
                                    const std::vector<const Experience*>& batch,
                                    double gamma, TargetMode mode);

// One SGD step: uniform batch, squared Bellman error on the taken actions,
// single Adam update. Returns the batch loss.
double train_step(AgentNetwork& net, ReplayBuffer& buffer, AdamState& adam,
                  const TrainConfig& config, Rng& rng);

struct EpisodeReport {
    std::size_t steps = 0;
    double cumulative_reward = 0.0;
    double mean_loss = 0.0;
    std::size_t train_steps = 0;
    double epsilon_end = 0.0;
};

// Runs one full episode over to env (resets first): act, store, train once
// per step once the buffer is warm, and hard-copy online -> target at the
// end when the episode index hits the update period.
EpisodeReport run_episode(TradingEnv& env, AgentNetwork& net, ReplayBuffer& buffer,
                          AdamState& adam, const TrainConfig& config,
                          std::size_t episode_index, std::size_t total_steps,
                          std::size_t& global_step, Rng& rng,
                          std::vector<double>* step_losses = nullptr);

} // namespace mgtn
