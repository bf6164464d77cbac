// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/lora_moe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "omnifx/error.hpp"

namespace omnifx::moe {

using numerics::Graph;

MoEConfig MoEConfig::toy() {
    return {4, 1, 4, 4.0};
}

MoEConfig MoEConfig::large() {
    return {8, 2, 128, 128.0};
}

MoEConfig MoEConfig::four_experts_top1() {
    return {4, 1, 4, 4.0};
}

void MoEConfig::validate() const {
    if (experts == 0) {
        throw Error("MoE needs at least one expert");
    }
    if (top_k == 0 || top_k > experts) {
        throw Error("top_k must lie in [1, " + std::to_string(experts) + "], got " + std::to_string(top_k));
    }
    if (rank == 0) {
        throw Error("LoRA rank must be positive");
    }
}

void MoELayerParams::validate() const {
    if (experts.empty()) {
        throw Error("MoE layer needs at least one expert");
    }
    if (top_k == 0 || top_k > experts.size()) {
        throw Error("top_k " + std::to_string(top_k) + " exceeds expert count " + std::to_string(experts.size()));
    }
    std::size_t d_in = base_weight.rows();
    std::size_t d_out = base_weight.cols();
    if (base_bias.shape() != numerics::Shape{1, d_out}) {
        throw ShapeError("base bias " + numerics::to_string(base_bias.shape()) + " vs weight " +
                         numerics::to_string(base_weight.shape()));
    }
    if (gate_weight.shape() != numerics::Shape{d_in, experts.size()}) {
        throw ShapeError("gate weight " + numerics::to_string(gate_weight.shape()) + " expected [" +
                         std::to_string(d_in) + "x" + std::to_string(experts.size()) + "]");
    }
    for (const auto& e : experts) {
        if (e.a.rows() != d_in || e.b.cols() != d_out || e.a.cols() != e.b.rows()) {
            throw ShapeError("expert factors " + numerics::to_string(e.a.shape()) + " and " +
                             numerics::to_string(e.b.shape()) + " do not fit base " +
                             numerics::to_string(base_weight.shape()));
        }
    }
}

Var expert_forward(Var x, const LoraExpertVars& expert) {
    double r = static_cast<double>(expert.a.value().cols());
    return numerics::scale(numerics::matmul(numerics::matmul(x, expert.a), expert.b), expert.alpha / r);
}

Tensor top_k_selection(const Tensor& probs, std::size_t k) {
    std::size_t n = probs.cols();
    if (k == 0 || k > n) {
        throw Error("top_k " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    }
    Tensor keep(probs.shape(), 0.0);
    std::vector<std::size_t> order(n);
    for (std::size_t t = 0; t < probs.rows(); ++t) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return probs(t, a) > probs(t, b); });
        for (std::size_t j = 0; j < k; ++j) {
            keep(t, order[j]) = 1.0;
        }
    }
    return keep;
}

GateOutput gate_route(Var x, Var gate_weight, std::size_t top_k, RoutingMode mode) {
    std::size_t n = gate_weight.value().cols();
    if (top_k == 0 || top_k > n) {
        throw Error("gate_route: top_k " + std::to_string(top_k) + " exceeds expert count " + std::to_string(n));
    }
    Var probs = numerics::softmax_rows(numerics::matmul(x, gate_weight));
    if (mode == RoutingMode::Full || top_k == n) {
        return {probs, probs};
    }
    return {numerics::mul_const(probs, top_k_selection(probs.value(), top_k)), probs};
}

RoutingStats routing_stats(const Tensor& probs) {
    std::size_t tokens = probs.rows();
    std::size_t n = probs.cols();
    RoutingStats stats;
    stats.tokens = tokens;
    stats.fraction.assign(n, 0.0);
    stats.mean_prob.assign(n, 0.0);
    for (std::size_t t = 0; t < tokens; ++t) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < n; ++i) {
            stats.mean_prob[i] += probs(t, i);
            if (probs(t, i) > probs(t, best)) {
                best = i;
            }
        }
        stats.fraction[best] += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        stats.fraction[i] /= static_cast<double>(tokens);
        stats.mean_prob[i] /= static_cast<double>(tokens);
    }
    stats.aux = aux_loss(stats);
    return stats;
}

double aux_loss(const RoutingStats& stats) {
    double total = 0.0;
    for (std::size_t i = 0; i < stats.fraction.size(); ++i) {
        total += stats.fraction[i] * stats.mean_prob[i];
    }
    return static_cast<double>(stats.fraction.size()) * total;
}

MoEVarOutput moe_forward(Var x, const MoELayerVars& layer, std::size_t top_k, RoutingMode mode) {
    std::size_t n = layer.experts.size();
    if (n == 0) {
        throw Error("moe_forward: no experts");
    }
    if (x.value().cols() != layer.base_weight.value().rows()) {
        throw ShapeError("moe_forward: input " + numerics::to_string(x.shape()) + " vs base weight " +
                         numerics::to_string(layer.base_weight.shape()));
    }

    Var base = numerics::add_row(numerics::matmul(x, layer.base_weight), layer.base_bias);
    GateOutput gate = gate_route(x, layer.gate_weight, top_k, mode);

    Var mixture;
    for (std::size_t i = 0; i < n; ++i) {
        Var g = numerics::slice_cols(gate.weights, i, i + 1);
        Var term = numerics::row_scale(expert_forward(x, layer.experts[i]), g);
        mixture = mixture.valid() ? numerics::add(mixture, term) : term;
    }

    RoutingStats stats = routing_stats(gate.probs.value());
    // f is an indicator and enters as a constant; gradient reaches the router through P.
    Tensor f({1, n}, stats.fraction);
    Var aux = numerics::scale(numerics::sum(numerics::mul_const(numerics::mean_rows(gate.probs), f)),
                              static_cast<double>(n));
    return {numerics::add(base, mixture), aux, std::move(stats)};
}

Tensor expert_forward(const Tensor& x, const LoraExpert& expert) {
    if (x.cols() != expert.a.rows() || expert.a.cols() != expert.b.rows()) {
        throw ShapeError("expert_forward: x " + numerics::to_string(x.shape()) + ", A " +
                         numerics::to_string(expert.a.shape()) + ", B " + numerics::to_string(expert.b.shape()));
    }
    Graph graph;
    LoraExpertVars vars{graph.constant(expert.a), graph.constant(expert.b), expert.alpha};
    return expert_forward(graph.constant(x), vars).value();
}

Tensor gate_route(const Tensor& x, const Tensor& gate_weight, std::size_t top_k, RoutingMode mode) {
    if (x.cols() != gate_weight.rows()) {
        throw ShapeError("gate_route: x " + numerics::to_string(x.shape()) + " vs gate " +
                         numerics::to_string(gate_weight.shape()));
    }
    Graph graph;
    return gate_route(graph.constant(x), graph.constant(gate_weight), top_k, mode).weights.value();
}

MoEOutput moe_forward(const Tensor& x, const MoELayerParams& params) {
    params.validate();
    Graph graph;
    MoELayerVars vars;
    vars.base_weight = graph.constant(params.base_weight);
    vars.base_bias = graph.constant(params.base_bias);
    vars.gate_weight = graph.constant(params.gate_weight);
    for (const auto& e : params.experts) {
        vars.experts.push_back({graph.constant(e.a), graph.constant(e.b), e.alpha});
    }
    auto out = moe_forward(graph.constant(x), vars, params.top_k, params.mode);
    return {out.y.value(), std::move(out.stats)};
}

MoELayerParams init_moe_layer(std::size_t d_in, std::size_t d_out, const MoEConfig& config, Rng& rng) {
    config.validate();
    std::normal_distribution<double> normal(0.0, 1.0);
    MoELayerParams p;
    p.base_weight = Tensor({d_in, d_out});
    double scale = 1.0 / std::sqrt(static_cast<double>(d_in));
    for (auto& v : p.base_weight.values()) {
        v = normal(rng) * scale;
    }
    p.base_bias = Tensor({1, d_out}, 0.0);
    for (std::size_t i = 0; i < config.experts; ++i) {
        LoraExpert e;
        e.a = Tensor({d_in, config.rank});
        for (auto& v : e.a.values()) {
            v = normal(rng) * 0.02;
        }
        e.b = Tensor({config.rank, d_out}, 0.0);
        e.alpha = config.alpha;
        p.experts.push_back(std::move(e));
    }
    p.gate_weight = Tensor({d_in, config.experts});
    for (auto& v : p.gate_weight.values()) {
        v = normal(rng) * 0.02;
    }
    p.top_k = config.top_k;
    return p;
}

} // namespace omnifx::moe
