#include "mgtn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "mgtn/rng.hpp"

namespace mgtn {

DenseTensor apply_activation(const DenseTensor& x, Activation act) {
    if (act == Activation::Identity) return x;
    DenseTensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return out;
}

DenseTensor activation_mask(const DenseTensor& x, Activation act) {
    DenseTensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = (act == Activation::Identity || x[i] > 0.0) ? 1.0 : 0.0;
    }
    return out;
}

void GMGTNLayer::rebuild_filters(std::size_t cap) {
    filters.clear();
    filters.reserve(adjacencies.size());
    for (std::size_t m = 0; m < adjacencies.size(); ++m) {
        filters.push_back(multilinear_filter(adjacencies[m], propagation[m], cap));
    }
}

GMGTNLayer make_gmgtn(std::vector<Adjacency> adjacencies,
                      std::vector<DenseTensor> weights,
                      std::vector<DenseTensor> propagation, Activation act) {
    GMGTNLayer layer;
    layer.adjacencies = std::move(adjacencies);
    layer.weights = std::move(weights);
    layer.propagation = std::move(propagation);
    layer.activation = act;
    const std::size_t m = layer.adjacencies.size();
    if (layer.weights.size() != m || layer.propagation.size() != m || m == 0) {
        throw std::invalid_argument("make_gmgtn: need one (A, W, P) triple per domain");
    }
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t j_m = layer.weights[k].dim(0);
        if (layer.propagation[k].dim(0) != j_m || layer.propagation[k].dim(1) != j_m) {
            throw std::invalid_argument("make_gmgtn: P^(m) must be (J_m x J_m)");
        }
        if (k + 1 < m && layer.weights[k + 1].dim(1) != j_m) {
            throw std::invalid_argument("make_gmgtn: feature dims do not chain");
        }
    }
    layer.rebuild_filters();
    return layer;
}

DenseTensor gmgtn_forward(const GMGTNLayer& layer, const DenseTensor& x) {
    const std::size_t m_count = layer.domain_count();
    if (x.order() != m_count + 1) {
        throw std::invalid_argument("gmgtn_forward: input order mismatch");
    }
    for (std::size_t m = 0; m < m_count; ++m) {
        if (x.dim(m + 1) != layer.adjacencies[m].node_count()) {
            throw std::invalid_argument("gmgtn_forward: graph mode size mismatch");
        }
    }
    DenseTensor cur = x;
    for (std::size_t m = 0; m < m_count; ++m) {
        // Feature transform W^(m) along the feature mode.
        cur = contract(layer.weights[m], {1}, cur, {0});
        // Multi-linear filter over (feature, I_m); contract its trailing
        // mode pair, then restore (J_m, I_1, ..., I_M) mode order.
        DenseTensor c = contract(layer.filters[m].op, {2, 3}, cur, {0, m + 1});
        // c modes: (J_m, I_m, I_1.., I_{m-1}, I_{m+1}, ..)
        std::vector<std::size_t> perm(c.order());
        perm[0] = 0;
        std::size_t src = 2;
        for (std::size_t k = 1; k < c.order(); ++k) {
            perm[k] = (k == m + 1) ? 1 : src++;
        }
        cur = permute(c, perm);
    }
    return apply_activation(cur, layer.activation);
}

FMGTNLayer make_fmgtn(std::span<const Adjacency> adjacencies, DenseTensor weight,
                      Activation act) {
    FMGTNLayer layer;
    for (const auto& a : adjacencies) {
        layer.filters.push_back(shift_filter(a).op);
    }
    layer.weight = std::move(weight);
    layer.activation = act;
    return layer;
}

namespace {

DenseTensor fmgtn_preactivation(const DenseTensor& weight,
                                std::span<const DenseTensor> filters,
                                const DenseTensor& x) {
    if (x.order() != filters.size() + 1 || x.dim(0) != weight.dim(1)) {
        throw std::invalid_argument("fmgtn: input shape mismatch");
    }
    DenseTensor cur = contract(weight, {1}, x, {0});
    for (std::size_t m = 0; m < filters.size(); ++m) {
        cur = mode_product(cur, m + 1, filters[m]);
    }
    return cur;
}

} // namespace

DenseTensor fmgtn_forward(const FMGTNLayer& layer, const DenseTensor& x) {
    return apply_activation(
        fmgtn_preactivation(layer.weight,
                            std::span<const DenseTensor>(layer.filters), x),
        layer.activation);
}

std::size_t AgentConfig::hidden_units() const { return shape_product(tt_out_modes); }

std::vector<std::size_t> AgentConfig::input_shape() const {
    std::vector<std::size_t> s{input_features};
    s.insert(s.end(), graph_dims.begin(), graph_dims.end());
    return s;
}

void AgentConfig::validate() const {
    if (input_features == 0 || hidden_features == 0 || graph_dims.empty()) {
        throw std::invalid_argument("AgentConfig: empty dimensions");
    }
    std::size_t extractor_out = hidden_features;
    for (std::size_t d : graph_dims) extractor_out *= d;
    if (shape_product(tt_in_modes) != extractor_out) {
        throw std::invalid_argument(
            "AgentConfig: TT input factorization must cover the flattened "
            "extractor output (" +
            std::to_string(extractor_out) + " values)");
    }
    if (tt_out_modes.empty() || tt_in_modes.empty()) {
        throw std::invalid_argument("AgentConfig: empty TT factorization");
    }
    if (tt_in_modes.size() != tt_out_modes.size()) {
        throw std::invalid_argument("AgentConfig: TT mode factorizations differ in length");
    }
    if (tt_ranks.size() != tt_in_modes.size() + 1 || tt_ranks.front() != 1 ||
        tt_ranks.back() != 1) {
        throw std::invalid_argument("AgentConfig: TT ranks must be (1, ..., 1) bounded");
    }
    for (std::size_t r : tt_ranks) {
        if (r == 0) throw std::invalid_argument("AgentConfig: zero TT rank");
    }
}

AgentParams AgentParams::zeros(const AgentConfig& config) {
    config.validate();
    AgentParams p;
    p.w_x = DenseTensor({config.hidden_features, config.input_features});
    p.tt = TTMatrix::zeros(config.tt_out_modes, config.tt_in_modes, config.tt_ranks);
    p.b_hidden = DenseTensor({config.hidden_units()});
    p.w_out = DenseTensor({AgentConfig::action_count, config.hidden_units()});
    p.b_out = DenseTensor({AgentConfig::action_count});
    return p;
}

std::vector<std::pair<std::string, DenseTensor*>> AgentParams::arrays() {
    std::vector<std::pair<std::string, DenseTensor*>> out;
    out.emplace_back("w_x", &w_x);
    for (std::size_t k = 0; k < tt.cores.size(); ++k) {
        out.emplace_back("tt_core_" + std::to_string(k), &tt.cores[k]);
    }
    out.emplace_back("b_hidden", &b_hidden);
    out.emplace_back("w_out", &w_out);
    out.emplace_back("b_out", &b_out);
    return out;
}

std::vector<std::pair<std::string, const DenseTensor*>> AgentParams::arrays() const {
    std::vector<std::pair<std::string, const DenseTensor*>> out;
    auto mut = const_cast<AgentParams*>(this)->arrays();
    out.reserve(mut.size());
    for (auto& [name, ptr] : mut) out.emplace_back(name, ptr);
    return out;
}

std::size_t AgentParams::scalar_count() const {
    std::size_t s = 0;
    for (const auto& [name, t] : arrays()) s += t->size();
    return s;
}

void init_params(AgentParams& params, const AgentConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    auto fill_uniform = [&rng](DenseTensor& t, double limit) {
        for (double& v : t.data()) v = rng.uniform(-limit, limit);
    };

    // Glorot-style limits: Var = 2 / (fan_in + fan_out), uniform on
    // (-sqrt(3 Var), sqrt(3 Var)).
    fill_uniform(params.w_x,
                 std::sqrt(6.0 / double(config.input_features + config.hidden_features)));

    // TT cores: the reconstructed matrix entry is a sum of prod-of-cores
    // terms, one per interior rank path, so per-core limits are set to give
    // the reconstruction the fan-based target variance.
    const double fan_in = double(shape_product(config.tt_in_modes));
    const double fan_out = double(shape_product(config.tt_out_modes));
    const double target_var = 2.0 / (fan_in + fan_out);
    double interior = 1.0;
    for (std::size_t k = 1; k + 1 < config.tt_ranks.size(); ++k) {
        interior *= double(config.tt_ranks[k]);
    }
    const std::size_t depth = config.tt_in_modes.size();
    const double core_var =
        std::pow(target_var / interior, 1.0 / double(depth));
    const double core_limit = std::sqrt(3.0 * core_var);
    for (auto& core : params.tt.cores) fill_uniform(core, core_limit);

    for (double& v : params.b_hidden.data()) v = 0.0;
    fill_uniform(params.w_out,
                 std::sqrt(6.0 / double(config.hidden_units() + AgentConfig::action_count)));
    for (double& v : params.b_out.data()) v = 0.0;
}

std::size_t param_count(const AgentConfig& config) {
    config.validate();
    std::size_t tt_total = 0;
    for (std::size_t k = 0; k < config.tt_in_modes.size(); ++k) {
        tt_total += config.tt_ranks[k] * config.tt_out_modes[k] * config.tt_in_modes[k] *
                    config.tt_ranks[k + 1];
    }
    const std::size_t h = config.hidden_units();
    return config.hidden_features * config.input_features + tt_total + h +
           AgentConfig::action_count * h + AgentConfig::action_count;
}

AgentNetwork make_agent(const AgentConfig& config, std::span<const Adjacency> adjacencies) {
    config.validate();
    if (adjacencies.size() != config.graph_dims.size()) {
        throw std::invalid_argument("make_agent: one adjacency per graph mode");
    }
    AgentNetwork net;
    net.config = config;
    for (std::size_t m = 0; m < adjacencies.size(); ++m) {
        if (adjacencies[m].node_count() != config.graph_dims[m]) {
            throw std::invalid_argument("make_agent: adjacency size mismatch on mode " +
                                        std::to_string(m + 1));
        }
        net.filters.push_back(shift_filter(adjacencies[m]).op);
    }
    net.online = AgentParams::zeros(config);
    net.target = AgentParams::zeros(config);
    return net;
}

void sync_target(AgentNetwork& net) { net.target = net.online; }

std::array<double, 2> agent_forward(const AgentNetwork& net, const AgentParams& params,
                                    const DenseTensor& x, AgentForwardCache* cache) {
    if (x.shape() != net.config.input_shape()) {
        throw std::invalid_argument("agent_forward: input shape mismatch");
    }
    // Shift filters act on graph modes and commute with the feature
    // transform; applying them to the J_0-wide raw input first costs
    // J_0/J_1 of the filter work and frees the backward pass from
    // transposed filter products.
    DenseTensor filtered = x;
    for (std::size_t m = 0; m < net.filters.size(); ++m) {
        filtered = mode_product(filtered, m + 1, net.filters[m]);
    }
    DenseTensor pre = contract(params.w_x, {1}, filtered, {0});
    DenseTensor h0 = apply_activation(pre, Activation::ReLU);

    std::vector<DenseTensor> steps;
    DenseTensor tt_out =
        cache ? tt_matvec_cached(params.tt, h0.reshaped(params.tt.in_modes), steps)
              : tt_matvec(params.tt, h0.reshaped(params.tt.in_modes));

    const std::size_t h = net.config.hidden_units();
    DenseTensor hidden_pre = add(tt_out.reshaped({h}), params.b_hidden);
    DenseTensor h1 = apply_activation(hidden_pre, Activation::ReLU);

    std::array<double, 2> q{};
    for (std::size_t a = 0; a < AgentConfig::action_count; ++a) {
        double s = params.b_out[a];
        for (std::size_t i = 0; i < h; ++i) s += params.w_out[a + i * 2] * h1[i];
        q[a] = s;
    }

    if (cache) {
        cache->filtered_input = std::move(filtered);
        cache->extractor_pre = std::move(pre);
        cache->extractor_out = std::move(h0);
        cache->tt_steps = std::move(steps);
        cache->hidden_pre = std::move(hidden_pre);
        cache->hidden_out = std::move(h1);
        cache->q = q;
    }
    return q;
}

GradientSet agent_backward(const AgentNetwork& net, const AgentParams& params,
                           const AgentForwardCache& cache,
                           const std::array<double, 2>& dq) {
    if (cache.tt_steps.empty()) {
        throw std::invalid_argument("agent_backward: missing forward cache");
    }
    GradientSet grads = AgentParams::zeros(net.config);
    const std::size_t h = net.config.hidden_units();

    // Output layer.
    for (std::size_t a = 0; a < AgentConfig::action_count; ++a) {
        grads.b_out[a] = dq[a];
        for (std::size_t i = 0; i < h; ++i) {
            grads.w_out[a + i * 2] = dq[a] * cache.hidden_out[i];
        }
    }
    DenseTensor dh1({h});
    for (std::size_t i = 0; i < h; ++i) {
        dh1[i] = params.w_out[0 + i * 2] * dq[0] + params.w_out[1 + i * 2] * dq[1];
    }

    // Hidden ReLU and bias.
    DenseTensor dv({h});
    for (std::size_t i = 0; i < h; ++i) {
        dv[i] = cache.hidden_pre[i] > 0.0 ? dh1[i] : 0.0;
    }
    grads.b_hidden = dv;

    // TT-dense layer.
    DenseTensor dtt_in;
    tt_matvec_backward(params.tt, cache.tt_steps, dv.reshaped(params.tt.out_modes),
                       grads.tt.cores, dtt_in);

    // Extractor ReLU.
    DenseTensor dh0 = dtt_in.reshaped(cache.extractor_pre.shape());
    DenseTensor du(dh0.shape());
    for (std::size_t i = 0; i < du.size(); ++i) {
        du[i] = cache.extractor_pre[i] > 0.0 ? dh0[i] : 0.0;
    }

    // pre = W x0 filtered(x), so dW^(x)[j1, j0] sums du against the cached
    // filtered input over all node tuples; the fixed filters need no
    // backward products of their own.
    std::vector<std::size_t> node_modes(net.config.graph_dims.size());
    for (std::size_t k = 0; k < node_modes.size(); ++k) node_modes[k] = k + 1;
    grads.w_x = contract(du, node_modes, cache.filtered_input, node_modes);

    return grads;
}

DenseTensor agent_forward_batch(const AgentNetwork& net, const AgentParams& params,
                                std::span<const DenseTensor* const> states,
                                AgentBatchCache* cache) {
    const std::size_t batch = states.size();
    if (batch == 0) throw std::invalid_argument("agent_forward_batch: empty batch");
    const auto in_shape = net.config.input_shape();
    DenseTensor::shape_type stacked_shape(in_shape);
    stacked_shape.push_back(batch);
    DenseTensor xb(stacked_shape);
    const std::size_t per = shape_product(in_shape);
    for (std::size_t s = 0; s < batch; ++s) {
        if (states[s]->shape() != in_shape) {
            throw std::invalid_argument("agent_forward_batch: state shape mismatch");
        }
        std::copy(states[s]->data().begin(), states[s]->data().end(),
                  xb.data().begin() + s * per);
    }

    // Extractor: the trailing batch mode rides through every contraction;
    // the commuting filters run on the J_0-wide input (see agent_forward).
    DenseTensor filtered = std::move(xb);
    for (std::size_t m = 0; m < net.filters.size(); ++m) {
        filtered = mode_product(filtered, m + 1, net.filters[m]);
    }
    DenseTensor pre = contract(params.w_x, {1}, filtered, {0});
    DenseTensor h0 = apply_activation(pre, Activation::ReLU);

    std::vector<DenseTensor> steps;
    DenseTensor::shape_type tt_in_shape(params.tt.in_modes);
    tt_in_shape.push_back(batch);
    DenseTensor tt_out = tt_matvec_batch(params.tt, h0.reshaped(tt_in_shape), batch,
                                         cache ? &steps : nullptr);

    const std::size_t h = net.config.hidden_units();
    DenseTensor hidden_pre = tt_out.reshaped({h, batch});
    for (std::size_t s = 0; s < batch; ++s) {
        for (std::size_t i = 0; i < h; ++i) hidden_pre[i + s * h] += params.b_hidden[i];
    }
    DenseTensor h1 = apply_activation(hidden_pre, Activation::ReLU);

    DenseTensor q = contract(params.w_out, {1}, h1, {0}); // (2, B)
    for (std::size_t s = 0; s < batch; ++s) {
        q[0 + s * 2] += params.b_out[0];
        q[1 + s * 2] += params.b_out[1];
    }

    if (cache) {
        cache->batch = batch;
        cache->filtered_input = std::move(filtered);
        cache->extractor_pre = std::move(pre);
        cache->extractor_out = std::move(h0);
        cache->tt_steps = std::move(steps);
        cache->hidden_pre = std::move(hidden_pre);
        cache->hidden_out = std::move(h1);
    }
    return q;
}

GradientSet agent_backward_batch(const AgentNetwork& net, const AgentParams& params,
                                 const AgentBatchCache& cache, const DenseTensor& dq) {
    const std::size_t batch = cache.batch;
    if (batch == 0 || cache.tt_steps.empty()) {
        throw std::invalid_argument("agent_backward_batch: missing forward cache");
    }
    if (dq.shape() != DenseTensor::shape_type{AgentConfig::action_count, batch}) {
        throw std::invalid_argument("agent_backward_batch: dq shape mismatch");
    }
    GradientSet grads = AgentParams::zeros(net.config);
    const std::size_t h = net.config.hidden_units();

    // Output layer; contracting the batch mode sums over samples.
    grads.w_out = contract(dq, {1}, cache.hidden_out, {1});
    for (std::size_t s = 0; s < batch; ++s) {
        grads.b_out[0] += dq[0 + s * 2];
        grads.b_out[1] += dq[1 + s * 2];
    }

    DenseTensor dh1 = contract(params.w_out, {0}, dq, {0}); // (H, B)
    DenseTensor dv(dh1.shape());
    for (std::size_t i = 0; i < dv.size(); ++i) {
        dv[i] = cache.hidden_pre[i] > 0.0 ? dh1[i] : 0.0;
    }
    for (std::size_t s = 0; s < batch; ++s) {
        for (std::size_t i = 0; i < h; ++i) grads.b_hidden[i] += dv[i + s * h];
    }

    DenseTensor::shape_type tt_out_shape(params.tt.out_modes);
    tt_out_shape.push_back(batch);
    DenseTensor dtt_in;
    tt_matvec_backward_batch(params.tt, cache.tt_steps, dv.reshaped(tt_out_shape), batch,
                             grads.tt.cores, dtt_in);

    DenseTensor dh0 = dtt_in.reshaped(cache.extractor_pre.shape());
    DenseTensor du(dh0.shape());
    for (std::size_t i = 0; i < du.size(); ++i) {
        du[i] = cache.extractor_pre[i] > 0.0 ? dh0[i] : 0.0;
    }

    // Contract graph and batch modes together against the cached filtered
    // input: summed dW^(x).
    std::vector<std::size_t> reduce_modes(net.config.graph_dims.size() + 1);
    for (std::size_t k = 0; k < reduce_modes.size(); ++k) reduce_modes[k] = k + 1;
    grads.w_x = contract(du, reduce_modes, cache.filtered_input, reduce_modes);

    return grads;
}

} // namespace mgtn
