// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "omnifx/diffusion.hpp"
#include "omnifx/model.hpp"
#include "omnifx/synthvfx.hpp"

namespace omnifx::train {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamState {
    model::ParameterSet m;
    model::ParameterSet v;
    std::size_t step = 0;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// AdamW with bias correction and decoupled decay. Every gradient must be
/// finite and shaped like its parameter.
void optimizer_step(model::ParameterSet& params, const model::ParameterSet& grads, AdamState& state,
                    const AdamConfig& config);

struct TrainConfig {
    std::size_t stage1_steps = 2000;
    std::size_t stage2_steps = 3000;
    std::size_t batch = 4;
    double lr = 1e-4;
    double beta = 0.01;
    double dropout = 0.1;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    diffusion::TimestepBands bands;
    synth::AugmentConfig augment;

    /// 2000 + 3000 steps at lr 1e-4.
    static TrainConfig full_schedule();
    /// Desk-sized run keeping the 2:3 stage ratio.
    static TrainConfig desk();

    void validate() const;
};

struct LossRecord {
    std::size_t step = 0;
    int stage = 1;
    double total = 0.0;
    double mse = 0.0;
    double aux = 0.0; // beta * balancing loss
    std::size_t conditions = 0; // condition pairs seen in the batch

    friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

struct BatchItem {
    diffusion::TrainingExample example;
    synth::Provenance provenance;
};

/// Draws one training batch: plain records in stage 1, augmented records in
/// stage 2, then whole-set condition dropout per item.
std::vector<BatchItem> draw_batch(std::span<const synth::SampleRecord> pool, int stage, const TrainConfig& config,
                                  Rng& rng);

/// Loss graph adapter for the toy denoiser.
diffusion::GraphDenoiser graph_denoiser(const model::BoundParams& params, const model::ModelConfig& config,
                                        const model::ForwardOptions& options);

struct TrainResult {
    model::DenoiserParams params;
    std::vector<LossRecord> trace;
};

using StepObserver = std::function<void(const LossRecord&)>;

/// Stage 1 on plain records, then stage 2 through augmentation. Throws with
/// the step index if the loss turns non-finite.
TrainResult train_dual_phase(std::span<const synth::SampleRecord> pool, model::DenoiserParams params,
                             const TrainConfig& config, const StepObserver& observer = {});

/// Inference v predictor bound to one reference frame.
diffusion::VPredictor model_predictor(const model::DenoiserParams& params, const Video& reference,
                                      const model::ForwardOptions& options = {});

/// DDIM sampling of the toy denoiser from a reference frame and conditions.
Video generate_video(const model::DenoiserParams& params, const Video& reference,
                     std::span<const conditioning::ConditionPair> conditions, const diffusion::NoiseSchedule& schedule,
                     const diffusion::SamplerConfig& sampler);

} // namespace omnifx::train
