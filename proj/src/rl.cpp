#include "mgtn/rl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgtn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
    storage_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Experience e) {
    if (storage_.size() < capacity_) {
        storage_.push_back(std::move(e));
    } else {
        storage_[next_] = std::move(e);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
    if (batch > storage_.size()) {
        throw std::invalid_argument("ReplayBuffer: batch larger than buffer");
    }
    // Partial Fisher-Yates over an index vector: uniform without replacement.
    std::vector<std::size_t> idx(storage_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t j = i + rng.uniform_int(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(batch);
    return idx;
}

AdamState AdamState::create(const AgentConfig& config, double lr) {
    AdamState s;
    s.lr = lr;
    s.m = AgentParams::zeros(config);
    s.v = AgentParams::zeros(config);
    return s;
}

void adam_step(AdamState& adam, AgentParams& params, const GradientSet& grads) {
    adam.step += 1;
    const double bc1 = 1.0 - std::pow(adam.beta1, double(adam.step));
    const double bc2 = 1.0 - std::pow(adam.beta2, double(adam.step));

    auto ps = params.arrays();
    auto gs = grads.arrays();
    auto ms = adam.m.arrays();
    auto vs = adam.v.arrays();
    for (std::size_t a = 0; a < ps.size(); ++a) {
        DenseTensor& p = *ps[a].second;
        const DenseTensor& g = *gs[a].second;
        DenseTensor& m = *ms[a].second;
        DenseTensor& v = *vs[a].second;
        if (!p.same_shape(g)) {
            throw std::invalid_argument("adam_step: gradient shape mismatch on " +
                                        ps[a].first);
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g[i];
            v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= adam.lr * mhat / (std::sqrt(vhat) + adam.eps);
        }
    }
}

TargetMode parse_target_mode(const std::string& name) {
    if (name == "paper-literal") return TargetMode::PaperLiteral;
    if (name == "decoupled") return TargetMode::Decoupled;
    throw std::invalid_argument("unknown target mode: " + name);
}

std::string target_mode_name(TargetMode mode) {
    return mode == TargetMode::PaperLiteral ? "paper-literal" : "decoupled";
}

void TrainConfig::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("TrainConfig: gamma must be in [0,1)");
    }
    if (batch_size == 0 || episodes == 0 || replay_capacity < batch_size) {
        throw std::invalid_argument("TrainConfig: bad batch/episode/capacity sizes");
    }
    if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0)) {
        throw std::invalid_argument("TrainConfig: epsilon bounds must be in [0,1]");
    }
    if (!(eps_decay_fraction > 0.0 && eps_decay_fraction <= 1.0)) {
        throw std::invalid_argument("TrainConfig: eps_decay_fraction must be in (0,1]");
    }
    if (target_update_episodes == 0) {
        throw std::invalid_argument("TrainConfig: target_update_episodes must be >= 1");
    }
    if (lr <= 0.0) throw std::invalid_argument("TrainConfig: lr must be positive");
}

double epsilon_at(const TrainConfig& config, std::size_t global_step,
                  std::size_t total_steps) {
    const double horizon = config.eps_decay_fraction * double(total_steps);
    if (horizon <= 0.0) return config.eps_end;
    const double frac = std::min(1.0, double(global_step) / horizon);
    return config.eps_start + (config.eps_end - config.eps_start) * frac;
}

Action greedy_action(const std::array<double, 2>& q) {
    // Tie-break toward Buy (index 0).
    return q[1] > q[0] ? Action::Sell : Action::Buy;
}

Action select_action(const AgentNetwork& net, const DenseTensor& state, double epsilon,
                     Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("select_action: epsilon out of range");
    }
    if (epsilon > 0.0 && rng.uniform01() < epsilon) {
        return static_cast<Action>(rng.uniform_int(2));
    }
    return greedy_action(agent_forward(net, net.online, state));
}

std::vector<double> bellman_targets(const AgentNetwork& net,
                                    const std::vector<const Experience*>& batch,
                                    double gamma, TargetMode mode) {
    if (batch.empty()) throw std::invalid_argument("bellman_targets: empty batch");
    const std::size_t n = batch.size();
    std::vector<const DenseTensor*> next_states;
    next_states.reserve(n);
    for (const Experience* e : batch) next_states.push_back(&e->next_state);

    const DenseTensor qt = agent_forward_batch(net, net.target, next_states);
    DenseTensor qo;
    if (mode == TargetMode::Decoupled) {
        qo = agent_forward_batch(net, net.online, next_states);
    }

    std::vector<double> targets;
    targets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (batch[i]->terminal) {
            targets.push_back(batch[i]->reward);
            continue;
        }
        double future;
        if (mode == TargetMode::PaperLiteral) {
            future = std::max(qt[0 + 2 * i], qt[1 + 2 * i]);
        } else {
            const std::size_t a = qo[1 + 2 * i] > qo[0 + 2 * i] ? 1 : 0;
            future = qt[a + 2 * i];
        }
        targets.push_back(batch[i]->reward + gamma * future);
    }
    return targets;
}

double train_step(AgentNetwork& net, ReplayBuffer& buffer, AdamState& adam,
                  const TrainConfig& config, Rng& rng) {
    if (buffer.size() < config.batch_size) {
        throw std::invalid_argument("train_step: buffer smaller than batch");
    }
    const auto indices = buffer.sample_indices(config.batch_size, rng);
    const std::size_t n = indices.size();
    std::vector<const Experience*> batch;
    batch.reserve(n);
    for (std::size_t i : indices) batch.push_back(&buffer.get(i));

    const auto targets = bellman_targets(net, batch, config.gamma, config.target_mode);

    std::vector<const DenseTensor*> states;
    states.reserve(n);
    for (const Experience* e : batch) states.push_back(&e->state);
    AgentBatchCache cache;
    const DenseTensor q = agent_forward_batch(net, net.online, states, &cache);

    // Squared Bellman error on the taken actions only; the other output
    // unit receives no gradient.
    const double inv_batch = 1.0 / double(n);
    DenseTensor dq({AgentConfig::action_count, n});
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = static_cast<std::size_t>(batch[i]->action);
        const double delta = q[a + 2 * i] - targets[i];
        loss += delta * delta * inv_batch;
        dq[a + 2 * i] = 2.0 * delta * inv_batch;
    }
    const GradientSet grads = agent_backward_batch(net, net.online, cache, dq);
    adam_step(adam, net.online, grads);
    return loss;
}

EpisodeReport run_episode(TradingEnv& env, AgentNetwork& net, ReplayBuffer& buffer,
                          AdamState& adam, const TrainConfig& config,
                          std::size_t episode_index, std::size_t total_steps,
                          std::size_t& global_step, Rng& rng,
                          std::vector<double>* step_losses) {
    env.reset();
    EpisodeReport report;
    double eps = epsilon_at(config, global_step, total_steps);
    while (!env.terminal()) {
        eps = epsilon_at(config, global_step, total_steps);
        const DenseTensor& state = env.state();
        const Action action = select_action(net, state, eps, rng);
        const auto result = env.step(action);

        Experience e;
        e.state = state;
        e.action = action;
        e.reward = result.reward;
        e.next_state = *result.next_state;
        e.terminal = result.terminal;
        buffer.push(std::move(e));

        if (buffer.size() >= config.batch_size) {
            const double loss = train_step(net, buffer, adam, config, rng);
            report.mean_loss += loss;
            report.train_steps += 1;
            if (step_losses) step_losses->push_back(loss);
        }
        report.cumulative_reward += result.reward;
        report.steps += 1;
        global_step += 1;
    }
    if (report.train_steps > 0) report.mean_loss /= double(report.train_steps);
    report.epsilon_end = eps;

    if ((episode_index + 1) % config.target_update_episodes == 0) {
        sync_target(net);
    }
    return report;
}

} // namespace mgtn
