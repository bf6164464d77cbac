// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/diffusion.hpp"

#include <cmath>

#include "omnifx/error.hpp"

namespace omnifx::diffusion {

namespace nx = omnifx::numerics;

namespace {

void require_same(const Video& a, const Video& b, const char* op) {
    if (!a.same_extents(b)) {
        throw ShapeError(std::string(op) + ": video extents differ");
    }
}

Video combine(const Video& a, double wa, const Video& b, double wb, const char* op) {
    require_same(a, b, op);
    Video out = a;
    auto o = out.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = wa * o[i] + wb * bv[i];
    }
    return out;
}

} // namespace

NoiseSchedule::NoiseSchedule(std::vector<double> alpha, std::vector<double> sigma)
    : alpha_(std::move(alpha)), sigma_(std::move(sigma)) {
    if (alpha_.size() != sigma_.size() || alpha_.size() < 3) {
        throw Error("noise schedule tables must have equal length covering t = 0..T with T >= 2");
    }
}

NoiseSchedule make_schedule(std::size_t steps, double beta_start, double beta_end) {
    if (steps < 2) {
        throw Error("make_schedule: need at least 2 steps, got " + std::to_string(steps));
    }
    std::vector<double> alpha(steps + 1);
    std::vector<double> sigma(steps + 1);
    alpha[0] = 1.0;
    sigma[0] = 0.0;
    double alpha_bar = 1.0;
    for (std::size_t t = 1; t <= steps; ++t) {
        double frac = static_cast<double>(t - 1) / static_cast<double>(steps - 1);
        double beta = beta_start + frac * (beta_end - beta_start);
        alpha_bar *= 1.0 - beta;
        alpha[t] = std::sqrt(alpha_bar);
        sigma[t] = std::sqrt(1.0 - alpha_bar);
    }
    return NoiseSchedule(std::move(alpha), std::move(sigma));
}

Video q_sample(const Video& x0, double alpha, double sigma, const Video& eps) {
    return combine(x0, alpha, eps, sigma, "q_sample");
}

Video q_sample(const Video& x0, const NoiseSchedule& schedule, std::size_t t, const Video& eps) {
    return q_sample(x0, schedule.alpha(t), schedule.sigma(t), eps);
}

Video v_target(const Video& x0, const Video& eps, double alpha, double sigma) {
    return combine(eps, alpha, x0, -sigma, "v_target");
}

Video v_target(const Video& x0, const Video& eps, const NoiseSchedule& schedule, std::size_t t) {
    return v_target(x0, eps, schedule.alpha(t), schedule.sigma(t));
}

Video recover_x0(const Video& x_t, const Video& v, double alpha, double sigma) {
    return combine(x_t, alpha, v, -sigma, "recover_x0");
}

Video recover_x0(const Video& x_t, const Video& v, const NoiseSchedule& schedule, std::size_t t) {
    return recover_x0(x_t, v, schedule.alpha(t), schedule.sigma(t));
}

Video recover_eps(const Video& x_t, const Video& v, double alpha, double sigma) {
    return combine(x_t, sigma, v, alpha, "recover_eps");
}

Video recover_eps(const Video& x_t, const Video& v, const NoiseSchedule& schedule, std::size_t t) {
    return recover_eps(x_t, v, schedule.alpha(t), schedule.sigma(t));
}

std::vector<std::size_t> sample_timesteps_nonuniform(std::size_t batch, Rng& rng, const TimestepBands& bands) {
    if (bands.boundary < 1 || bands.boundary >= bands.steps) {
        throw Error("timestep band boundary must lie in [1, steps)");
    }
    std::bernoulli_distribution high(bands.high_fraction);
    std::uniform_int_distribution<std::size_t> upper(bands.boundary + 1, bands.steps);
    std::uniform_int_distribution<std::size_t> lower(1, bands.boundary);
    std::vector<std::size_t> out(batch);
    for (auto& t : out) {
        t = high(rng) ? upper(rng) : lower(rng);
    }
    return out;
}

void SamplerConfig::validate() const {
    if (steps < 1) {
        throw Error("sampler needs at least one step");
    }
    if (!(cfg_scale >= 0.0)) {
        throw Error("guidance scale must be non-negative");
    }
}

std::vector<std::size_t> ddim_timesteps(std::size_t schedule_steps, std::size_t sampler_steps) {
    if (sampler_steps < 1 || sampler_steps > schedule_steps) {
        throw Error("sampler steps must lie in [1, " + std::to_string(schedule_steps) + "]");
    }
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < sampler_steps; ++k) {
        double t = static_cast<double>(schedule_steps) * static_cast<double>(sampler_steps - k) /
                   static_cast<double>(sampler_steps);
        out.push_back(static_cast<std::size_t>(std::llround(t)));
    }
    return out;
}

Video ddim_generate(std::span<const ConditionPair> conditions, const VPredictor& predictor,
                    const NoiseSchedule& schedule, const SamplerConfig& sampler, std::size_t frames,
                    std::size_t height, std::size_t width, std::size_t channels) {
    sampler.validate();
    Rng rng(sampler.seed);
    Video x(frames, height, width, channels);
    fill_normal(x.values(), rng);

    auto timesteps = ddim_timesteps(schedule.steps(), sampler.steps);
    for (std::size_t k = 0; k < timesteps.size(); ++k) {
        std::size_t t = timesteps[k];
        std::size_t next = k + 1 < timesteps.size() ? timesteps[k + 1] : 0;

        Video v = predictor(x, t, {});
        if (!conditions.empty()) {
            Video v_cond = predictor(x, t, conditions);
            auto vu = v.values();
            auto vc = v_cond.values();
            for (std::size_t i = 0; i < vu.size(); ++i) {
                vu[i] = vu[i] + sampler.cfg_scale * (vc[i] - vu[i]);
            }
        }
        Video x0 = recover_x0(x, v, schedule, t);
        Video eps = recover_eps(x, v, schedule, t);
        x = combine(x0, schedule.alpha(next), eps, schedule.sigma(next), "ddim_generate");
    }
    x.clamp_unit();
    return x;
}

LossGraph training_loss(nx::Graph& graph, std::span<const TrainingExample> batch, const GraphDenoiser& denoiser,
                        const NoiseSchedule& schedule, const TimestepBands& bands, double beta, Rng& rng) {
    if (batch.empty()) {
        throw Error("training_loss: empty batch");
    }
    LossGraph out;
    out.timesteps = sample_timesteps_nonuniform(batch.size(), rng, bands);

    nx::Var mse_total;
    nx::Var aux_total;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TrainingExample& ex = batch[i];
        std::size_t t = out.timesteps[i];
        Video eps(ex.target.frames(), ex.target.height(), ex.target.width(), ex.target.channels());
        fill_normal(eps.values(), rng);
        Video x_t = q_sample(ex.target, schedule, t, eps);
        Video v = v_target(ex.target, eps, schedule, t);

        GraphPrediction pred = denoiser.predict(graph, x_t, t, ex.reference, ex.conditions);
        nx::Var sample_mse = nx::mse(pred.v_hat, graph.constant(denoiser.layout(v)));
        mse_total = mse_total.valid() ? nx::add(mse_total, sample_mse) : sample_mse;
        aux_total = aux_total.valid() ? nx::add(aux_total, pred.aux) : pred.aux;
    }
    double inv = 1.0 / static_cast<double>(batch.size());
    nx::Var mse_mean = nx::scale(mse_total, inv);
    nx::Var aux_scaled = nx::scale(aux_total, beta * inv);
    out.mse = mse_mean.value()[0];
    out.aux_term = aux_scaled.value()[0];
    out.total = nx::add(mse_mean, aux_scaled);
    return out;
}

} // namespace omnifx::diffusion
