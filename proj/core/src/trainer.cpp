// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/trainer.hpp"

#include <cmath>

#include "omnifx/error.hpp"

namespace omnifx::train {

namespace nx = omnifx::numerics;

void optimizer_step(model::ParameterSet& params, const model::ParameterSet& grads, AdamState& state,
                    const AdamConfig& config) {
    for (const auto& [name, g] : grads) {
        auto it = params.find(name);
        if (it == params.end()) {
            throw Error("optimizer_step: gradient for unknown parameter '" + name + "'");
        }
        if (g.shape() != it->second.shape()) {
            throw ShapeError("optimizer_step: gradient " + nx::to_string(g.shape()) + " vs parameter " +
                             nx::to_string(it->second.shape()) + " for '" + name + "'");
        }
        if (!g.all_finite()) {
            throw Error("optimizer_step: non-finite gradient for '" + name + "'");
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (const auto& [name, g] : grads) {
        nx::Tensor& p = params.at(name);
        auto [mit, m_new] = state.m.try_emplace(name, g.shape(), 0.0);
        auto [vit, v_new] = state.v.try_emplace(name, g.shape(), 0.0);
        auto m = mit->second.values();
        auto v = vit->second.values();
        auto pv = p.values();
        auto gv = g.values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gv[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gv[i] * gv[i];
            double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + config.eps);
            pv[i] -= config.lr * (update + config.weight_decay * pv[i]);
        }
    }
}

TrainConfig TrainConfig::full_schedule() {
    TrainConfig c;
    c.stage1_steps = 2000;
    c.stage2_steps = 3000;
    c.lr = 1e-4;
    c.beta = 0.01;
    return c;
}

TrainConfig TrainConfig::desk() {
    TrainConfig c;
    c.stage1_steps = 600;
    c.stage2_steps = 900;
    c.lr = 1e-3;
    return c;
}

void TrainConfig::validate() const {
    if (batch < 1) {
        throw Error("train: batch size must be at least 1");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw Error("train: learning rate must be positive");
    }
    if (!(beta >= 0.0)) {
        throw Error("train: beta must be non-negative");
    }
    if (!(dropout >= 0.0 && dropout <= 1.0)) {
        throw Error("train: condition dropout must lie in [0, 1]");
    }
    augment.validate();
}

std::vector<BatchItem> draw_batch(std::span<const synth::SampleRecord> pool, int stage, const TrainConfig& config,
                                  Rng& rng) {
    std::vector<BatchItem> out;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::bernoulli_distribution drop(config.dropout);
    for (std::size_t i = 0; i < config.batch; ++i) {
        synth::SampleRecord record =
            stage == 1 ? pool[pick(rng)] : synth::augment_batch(pool, rng, config.augment);
        BatchItem item;
        item.provenance = record.provenance;
        item.example.target = std::move(record.target);
        item.example.reference = std::move(record.reference);
        item.example.conditions = std::move(record.conditions);
        if (drop(rng)) {
            item.example.conditions.clear();
        }
        out.push_back(std::move(item));
    }
    return out;
}

diffusion::GraphDenoiser graph_denoiser(const model::BoundParams& params, const model::ModelConfig& config,
                                        const model::ForwardOptions& options) {
    diffusion::GraphDenoiser d;
    d.predict = [&params, config, options](nx::Graph& graph, const Video& x_t, std::size_t t, const Video& reference,
                                           std::span<const conditioning::ConditionPair> conditions) {
        auto out = model::denoise(graph, params, config, x_t, t, reference, conditions, options);
        return diffusion::GraphPrediction{out.v_tokens, out.aux};
    };
    d.layout = [patch = config.patch](const Video& v) { return model::patchify(v, patch); };
    return d;
}

TrainResult train_dual_phase(std::span<const synth::SampleRecord> pool, model::DenoiserParams params,
                             const TrainConfig& config, const StepObserver& observer) {
    config.validate();
    if (pool.empty()) {
        throw Error("train: empty pool");
    }
    for (const auto& r : pool) {
        if (r.provenance.category != synth::Category::Plain || r.conditions.size() != 1) {
            throw Error("train: pool records must be plain single-effect samples");
        }
    }
    const model::ModelConfig& mc = params.config;
    auto schedule = diffusion::make_schedule(mc.timesteps);
    diffusion::TimestepBands bands = config.bands;
    bands.steps = mc.timesteps;

    TrainResult result;
    Rng rng(config.seed);
    AdamState state;
    AdamConfig adam;
    adam.lr = config.lr;
    adam.weight_decay = config.weight_decay;
    model::ForwardOptions options{moe::RoutingMode::TopK};

    const std::size_t total_steps = config.stage1_steps + config.stage2_steps;
    for (std::size_t step = 0; step < total_steps; ++step) {
        int stage = step < config.stage1_steps ? 1 : 2;
        auto items = draw_batch(pool, stage, config, rng);
        std::vector<diffusion::TrainingExample> batch;
        LossRecord record;
        record.step = step;
        record.stage = stage;
        for (auto& item : items) {
            record.conditions += item.example.conditions.size();
            batch.push_back(std::move(item.example));
        }

        nx::Graph graph;
        model::BoundParams bound(graph, params.tensors, true);
        auto loss = diffusion::training_loss(graph, batch, graph_denoiser(bound, mc, options), schedule, bands,
                                             config.beta, rng);
        record.total = loss.total.value()[0];
        record.mse = loss.mse;
        record.aux = loss.aux_term;
        if (!std::isfinite(record.total)) {
            throw Error("train: non-finite loss at step " + std::to_string(step));
        }
        graph.backward(loss.total);
        optimizer_step(params.tensors, bound.gradients(), state, adam);

        result.trace.push_back(record);
        if (observer) {
            observer(record);
        }
    }
    result.params = std::move(params);
    return result;
}

diffusion::VPredictor model_predictor(const model::DenoiserParams& params, const Video& reference,
                                      const model::ForwardOptions& options) {
    return [&params, reference, options](const Video& x_t, std::size_t t,
                                         std::span<const conditioning::ConditionPair> conditions) {
        return model::forward_denoiser(x_t, t, reference, conditions, params, options).v;
    };
}

Video generate_video(const model::DenoiserParams& params, const Video& reference,
                     std::span<const conditioning::ConditionPair> conditions, const diffusion::NoiseSchedule& schedule,
                     const diffusion::SamplerConfig& sampler) {
    const model::ModelConfig& c = params.config;
    return diffusion::ddim_generate(conditions, model_predictor(params, reference), schedule, sampler, c.frames,
                                    c.height, c.width, c.channels);
}

} // namespace omnifx::train
