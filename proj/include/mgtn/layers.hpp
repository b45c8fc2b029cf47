#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgtn/graph.hpp"
#include "mgtn/tensor.hpp"
#include "mgtn/tt.hpp"

namespace mgtn {

enum class Activation { Identity, ReLU };

DenseTensor apply_activation(const DenseTensor& x, Activation act);
// Derivative mask of the activation at pre-activation x. ReLU uses the
// convention d/dx = 0 at exactly 0.
DenseTensor activation_mask(const DenseTensor& x, Activation act);

// General multi-graph layer: input (J_0, I_1, ..., I_M), output
// (J_M, I_1, ..., I_M). Per graph domain m it applies the feature transform
// W^(m) along the feature mode and then the order-4 multi-linear filter
// built from (A^(m), P^(m)) over the (feature, I_m) mode pair. Contractions
// are realized mode-order-preserving: the literal chain rotates mode order
// at every filter application, and the two differ only by that permutation.
struct GMGTNLayer {
    std::vector<Adjacency> adjacencies;   // A^(m), (I_m x I_m)
    std::vector<DenseTensor> weights;     // W^(m), (J_m x J_{m-1})
    std::vector<DenseTensor> propagation; // P^(m), (J_m x J_m)
    std::vector<GraphFilter> filters;     // derived from (A^(m), P^(m))
    Activation activation = Activation::ReLU;

    std::size_t domain_count() const { return adjacencies.size(); }
    // Filters must be rebuilt whenever a propagation matrix changes.
    void rebuild_filters(std::size_t cap = 4096);
};

GMGTNLayer make_gmgtn(std::vector<Adjacency> adjacencies,
                      std::vector<DenseTensor> weights,
                      std::vector<DenseTensor> propagation, Activation act);

DenseTensor gmgtn_forward(const GMGTNLayer& layer, const DenseTensor& x);

// Fast variant: fixes P^(m) = I and shares one weight matrix, so each graph
// domain only needs the order-2 shift filter I + A^(m), applied as a mode
// product along its own mode.
struct FMGTNLayer {
    std::vector<DenseTensor> filters; // shift matrices (I + A^(m)), (I_m x I_m)
    DenseTensor weight;               // W^(x), (J_1 x J_0)
    Activation activation = Activation::ReLU;
};

FMGTNLayer make_fmgtn(std::span<const Adjacency> adjacencies, DenseTensor weight,
                      Activation act);

DenseTensor fmgtn_forward(const FMGTNLayer& layer, const DenseTensor& x);

// --- the trading agent's Q-network ---

// Architecture of the 3-layer Q-network: fMGTN feature extraction, a
// TT-format dense layer with bias and ReLU, and a linear 2-unit output.
struct AgentConfig {
    std::size_t input_features = 4;            // J_0
    std::size_t hidden_features = 16;           // J_1
    std::vector<std::size_t> graph_dims{30, 9}; // I_1, ..., I_M
    std::vector<std::size_t> tt_in_modes{16, 30, 9};
    std::vector<std::size_t> tt_out_modes{3, 3, 3};
    std::vector<std::size_t> tt_ranks{1, 2, 2, 1};
    static constexpr std::size_t action_count = 2; // buy, sell

    std::size_t hidden_units() const; // prod of tt_out_modes
    void validate() const;

    std::vector<std::size_t> input_shape() const; // (J_0, I_1, ..., I_M)
};

// Trainable parameter set. Also serves as the gradient container: gradient
// arrays mirror parameter arrays exactly.
struct AgentParams {
    DenseTensor w_x;      // (J_1 x J_0)
    TTMatrix tt;          // dense layer in TT format
    DenseTensor b_hidden; // (hidden_units)
    DenseTensor w_out;    // (2 x hidden_units)
    DenseTensor b_out;    // (2)

    static AgentParams zeros(const AgentConfig& config);

    std::vector<std::pair<std::string, DenseTensor*>> arrays();
    std::vector<std::pair<std::string, const DenseTensor*>> arrays() const;
    std::size_t scalar_count() const;
};

using GradientSet = AgentParams;

// Fan-scaled uniform init: weight matrices Glorot-style; TT cores scaled so
// the reconstructed dense matrix has fan-based variance; biases zero.
void init_params(AgentParams& params, const AgentConfig& config, std::uint64_t seed);

// Closed form for the trainable scalar count:
//   J1*J0 + sum_k R_{k-1}*out_k*in_k*R_k + H + A*H + A
// with H = prod(out_modes), A = 2.
std::size_t param_count(const AgentConfig& config);

// Online network, frozen target copy, and the fixed graph filters.
struct AgentNetwork {
    AgentConfig config;
    std::vector<DenseTensor> filters; // shift matrices, one per graph mode
    AgentParams online;
    AgentParams target;
};

AgentNetwork make_agent(const AgentConfig& config, std::span<const Adjacency> adjacencies);
// Hard copy online -> target.
void sync_target(AgentNetwork& net);

struct AgentForwardCache {
    DenseTensor filtered_input; // graph filters applied to the raw input
    DenseTensor extractor_pre;  // before ReLU
    DenseTensor extractor_out; // after ReLU; also the TT input
    std::vector<DenseTensor> tt_steps;
    DenseTensor hidden_pre; // TT output + bias, before ReLU
    DenseTensor hidden_out;
    std::array<double, 2> q{};
};

std::array<double, 2> agent_forward(const AgentNetwork& net, const AgentParams& params,
                                    const DenseTensor& x,
                                    AgentForwardCache* cache = nullptr);

// Exact reverse-mode gradients for all trainable arrays; graph filters and
// adjacencies are fixed and receive none.
GradientSet agent_backward(const AgentNetwork& net, const AgentParams& params,
                           const AgentForwardCache& cache,
                           const std::array<double, 2>& dq);

// Batched evaluation: one GEMM per layer for the whole minibatch instead
// of per-sample products. Identical math, samples stacked on one trailing
// mode, deterministic reduction order.
struct AgentBatchCache {
    std::size_t batch = 0;
    DenseTensor filtered_input; // (J_0, I_1, ..., I_M, B), filters applied
    DenseTensor extractor_pre;  // (J_1, I_1, ..., I_M, B)
    DenseTensor extractor_out;
    std::vector<DenseTensor> tt_steps;
    DenseTensor hidden_pre; // (H, B)
    DenseTensor hidden_out;
};

// Q-values for a batch of states, shaped (2, B).
DenseTensor agent_forward_batch(const AgentNetwork& net, const AgentParams& params,
                                std::span<const DenseTensor* const> states,
                                AgentBatchCache* cache = nullptr);

// Gradients summed over the batch; dq is (2, B).
GradientSet agent_backward_batch(const AgentNetwork& net, const AgentParams& params,
                                 const AgentBatchCache& cache, const DenseTensor& dq);

} // namespace mgtn
