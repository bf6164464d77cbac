// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "omnifx/numerics/autograd.hpp"
#include "omnifx/video.hpp"

namespace omnifx::moe {

using numerics::Tensor;
using numerics::Var;

/// Training keeps the k largest gate entries; inference activates every expert.
enum class RoutingMode { TopK, Full };

struct MoEConfig {
    std::size_t experts = 4;
    std::size_t top_k = 1;
    std::size_t rank = 4;
    double alpha = 4.0;

    /// Desk-scale default: 4 experts, top-1, rank 4.
    static MoEConfig toy();
    /// Rank-128 adapters with 8 experts, top-2.
    static MoEConfig large();
    /// The "4 experts + top-1" ablation row.
    static MoEConfig four_experts_top1();

    void validate() const;
};

/// Low-rank expert E(x) = (alpha / r) x A B.
struct LoraExpert {
    Tensor a; // d_in × r
    Tensor b; // r × d_out
    double alpha = 1.0;

    std::size_t rank() const { return a.cols(); }
    double scaling() const { return alpha / static_cast<double>(rank()); }
};

struct MoELayerParams {
    Tensor base_weight; // d_in × d_out
    Tensor base_bias;   // 1 × d_out
    std::vector<LoraExpert> experts;
    Tensor gate_weight; // d_in × n
    std::size_t top_k = 1;
    RoutingMode mode = RoutingMode::TopK;

    void validate() const;
};

/// Per-batch routing summary used by the balancing loss.
struct RoutingStats {
    std::vector<double> fraction;  // f_i: share of tokens whose argmax is expert i
    std::vector<double> mean_prob; // P_i: token-mean router probability
    double aux = 0.0;              // n Σ f_i P_i
    std::size_t tokens = 0;
};

// Graph-level building blocks.

struct LoraExpertVars {
    Var a;
    Var b;
    double alpha = 1.0;
};

struct MoELayerVars {
    Var base_weight;
    Var base_bias;
    std::vector<LoraExpertVars> experts;
    Var gate_weight;
};

struct GateOutput {
    Var weights; // T × n gate values as used in the mixture
    Var probs;   // T × n full softmax
};

struct MoEVarOutput {
    Var y;
    Var aux;
    RoutingStats stats;
};

Var expert_forward(Var x, const LoraExpertVars& expert);
GateOutput gate_route(Var x, Var gate_weight, std::size_t top_k, RoutingMode mode);
MoEVarOutput moe_forward(Var x, const MoELayerVars& layer, std::size_t top_k, RoutingMode mode);

/// 0/1 selection of the k largest entries per row; ties go to the lower index.
Tensor top_k_selection(const Tensor& probs, std::size_t k);
/// Statistics of a T × n matrix of full-softmax router probabilities.
RoutingStats routing_stats(const Tensor& probs);
double aux_loss(const RoutingStats& stats);

// Tensor-level convenience wrappers over the graph path.

Tensor expert_forward(const Tensor& x, const LoraExpert& expert);
Tensor gate_route(const Tensor& x, const Tensor& gate_weight, std::size_t top_k, RoutingMode mode);

struct MoEOutput {
    Tensor y;
    RoutingStats stats;
};

MoEOutput moe_forward(const Tensor& x, const MoELayerParams& params);

/// Base weight ~ N(0, 1/d_in), A ~ N(0, 0.02²), B = 0, gate ~ N(0, 0.02²),
/// so a fresh layer behaves exactly like its base linear map.
MoELayerParams init_moe_layer(std::size_t d_in, std::size_t d_out, const MoEConfig& config, Rng& rng);

} // namespace omnifx::moe
