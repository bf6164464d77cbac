// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "omnifx/conditioning.hpp"
#include "omnifx/numerics/autograd.hpp"
#include "omnifx/video.hpp"

namespace omnifx::diffusion {

using conditioning::ConditionPair;

/// Variance-preserving schedule with alpha_t^2 + sigma_t^2 = 1.
///
/// Steps are 1-indexed; t = 0 is the clean endpoint (alpha = 1, sigma = 0)
/// that the sampler steps into last.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> alpha, std::vector<double> sigma);

    std::size_t steps() const { return alpha_.size() - 1; }
    double alpha(std::size_t t) const { return alpha_.at(t); }
    double sigma(std::size_t t) const { return sigma_.at(t); }

private:
    std::vector<double> alpha_;
    std::vector<double> sigma_;
};

/// Linear beta from `beta_start` to `beta_end`, alpha_t = sqrt(prod(1 - beta)).
NoiseSchedule make_schedule(std::size_t steps, double beta_start = 1e-4, double beta_end = 2e-2);

Video q_sample(const Video& x0, double alpha, double sigma, const Video& eps);
Video q_sample(const Video& x0, const NoiseSchedule& schedule, std::size_t t, const Video& eps);

/// v = alpha * eps - sigma * x0
Video v_target(const Video& x0, const Video& eps, double alpha, double sigma);
Video v_target(const Video& x0, const Video& eps, const NoiseSchedule& schedule, std::size_t t);
/// x0 = alpha * x_t - sigma * v
Video recover_x0(const Video& x_t, const Video& v, double alpha, double sigma);
Video recover_x0(const Video& x_t, const Video& v, const NoiseSchedule& schedule, std::size_t t);
/// eps = sigma * x_t + alpha * v
Video recover_eps(const Video& x_t, const Video& v, double alpha, double sigma);
Video recover_eps(const Video& x_t, const Video& v, const NoiseSchedule& schedule, std::size_t t);

/// Timestep bands: with probability `high_fraction` draw uniformly from
/// (boundary, steps], otherwise from [1, boundary].
struct TimestepBands {
    std::size_t steps = 1000;
    std::size_t boundary = 900;
    double high_fraction = 0.75;
};

std::vector<std::size_t> sample_timesteps_nonuniform(std::size_t batch, Rng& rng, const TimestepBands& bands = {});

struct SamplerConfig {
    std::size_t steps = 50;
    double cfg_scale = 6.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Strided descending timesteps T = t_0 > t_1 > ... > t_{S-1} >= 1.
std::vector<std::size_t> ddim_timesteps(std::size_t schedule_steps, std::size_t sampler_steps);

/// Inference-time v predictor.
using VPredictor = std::function<Video(const Video& x_t, std::size_t t, std::span<const ConditionPair> conditions)>;

/// Deterministic DDIM with classifier-free guidance. The unconditional branch
/// is the same predictor with an empty condition list. Output is clamped to
/// [0, 1].
Video ddim_generate(std::span<const ConditionPair> conditions, const VPredictor& predictor,
                    const NoiseSchedule& schedule, const SamplerConfig& sampler, std::size_t frames,
                    std::size_t height, std::size_t width, std::size_t channels = 1);

// Training objective.

struct TrainingExample {
    Video target;    // x_0
    Video reference; // first frame
    std::vector<ConditionPair> conditions;
};

struct GraphPrediction {
    numerics::Var v_hat;
    numerics::Var aux;
};

/// Denoiser as seen by the loss: a graph builder plus the layout it predicts in.
struct GraphDenoiser {
    std::function<GraphPrediction(numerics::Graph&, const Video& x_t, std::size_t t, const Video& reference,
                                  std::span<const ConditionPair> conditions)>
        predict;
    std::function<numerics::Tensor(const Video&)> layout;
};

struct LossGraph {
    numerics::Var total;
    double mse = 0.0;      // batch-mean regression term
    double aux_term = 0.0; // beta * batch-mean balancing loss
    std::vector<std::size_t> timesteps;
};

/// L = mean_i mse(v_hat_i, v_i) + beta * mean_i aux_i.
///
/// Draw order from `rng`: all timesteps for the batch first, then one noise
/// video per example in batch order.
LossGraph training_loss(numerics::Graph& graph, std::span<const TrainingExample> batch, const GraphDenoiser& denoiser,
                        const NoiseSchedule& schedule, const TimestepBands& bands, double beta, Rng& rng);

} // namespace omnifx::diffusion
