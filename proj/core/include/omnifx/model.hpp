// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "omnifx/conditioning.hpp"
#include "omnifx/lora_moe.hpp"
#include "omnifx/numerics/autograd.hpp"
#include "omnifx/video.hpp"

namespace omnifx::model {

using conditioning::ConditionPair;
using numerics::Graph;
using numerics::Tensor;
using numerics::Var;

/// Which attention mask the blocks use. `Full` is the mask ablation.
enum class AttentionMaskMode { Iif, Full };

struct ModelConfig {
    std::size_t frames = 8;
    std::size_t height = 24;
    std::size_t width = 24;
    std::size_t channels = 1;
    std::size_t patch = 4;
    std::size_t dim = 64;
    std::size_t heads = 2;
    std::size_t blocks = 4;
    std::size_t ffn_hidden = 128;
    moe::MoEConfig moe = moe::MoEConfig::toy();
    std::size_t text_len = 2;
    std::size_t vocab = 4;
    std::size_t attn_lora_rank = 4;
    double attn_lora_alpha = 4.0;
    std::size_t timesteps = 1000;
    AttentionMaskMode attention = AttentionMaskMode::Iif;

    static ModelConfig toy();

    std::size_t grid_h() const { return height / patch; }
    std::size_t grid_w() const { return width / patch; }
    std::size_t spatial_len() const { return grid_h() * grid_w(); }
    std::size_t latent_len() const { return frames * spatial_len(); }
    std::size_t patch_dim() const { return patch * patch * channels; }
    std::size_t head_dim() const { return dim / heads; }

    void validate() const;
};

/// Named trainable tensors. Ordered by name so iteration is deterministic.
using ParameterSet = std::map<std::string, Tensor>;

struct DenoiserParams {
    ModelConfig config;
    ParameterSet tensors;

    std::size_t parameter_count() const;
};

/// Fresh parameters; LoRA and expert B factors start at zero.
DenoiserParams init_denoiser(const ModelConfig& config, Rng& rng);

/// Flattens p×p×C patches: token (f, gy, gx) in row-major order, features
/// ordered (py, px, c).
Tensor patchify(const Video& video, std::size_t patch);
Video unpatchify(const Tensor& tokens, std::size_t frames, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t patch);

/// Interleaved sin/cos embedding: e[2i] = sin(pos·w_i), e[2i+1] = cos(pos·w_i),
/// w_i = 10000^(-2i/dim). Odd `dim` leaves the last entry zero.
std::vector<double> sinusoidal_embedding(double position, std::size_t dim);

/// Fixed (frame, row, col) positional table over the latent token grid, L×d.
Tensor positional_table(const ModelConfig& config);
/// Rows of the positional table that belong to frame 0, S_p×d.
Tensor first_frame_positions(const ModelConfig& config);

/// Parameters bound into one graph, by name.
class BoundParams {
public:
    BoundParams(Graph& graph, const ParameterSet& params, bool trainable);
    /// Wraps variables that already live in a graph.
    explicit BoundParams(std::map<std::string, Var> vars) : vars_(std::move(vars)) {}

    Var operator[](const std::string& name) const;
    bool contains(const std::string& name) const { return vars_.count(name) != 0; }
    /// Gradients after `Graph::backward`, keyed like the parameter set.
    ParameterSet gradients() const;

private:
    std::map<std::string, Var> vars_;
};

struct ForwardOptions {
    moe::RoutingMode routing = moe::RoutingMode::Full;
};

struct DenoiserGraphOutput {
    Var v_tokens; // L × patch_dim prediction in patch layout
    Var aux;      // mean balancing loss over every MoE layer
    std::vector<moe::RoutingStats> routing;
};

/// 1×d time embedding: sinusoid of t through a learned linear map.
Var time_embed(Graph& graph, const BoundParams& params, const ModelConfig& config, std::size_t t);
Tensor time_embed(const DenoiserParams& params, std::size_t t);

/// Graph-level denoiser used for training.
DenoiserGraphOutput denoise(Graph& graph, const BoundParams& params, const ModelConfig& config, const Video& x_t,
                            std::size_t t, const Video& reference, std::span<const ConditionPair> conditions,
                            const ForwardOptions& options);

struct DenoiserResult {
    Video v;
    std::vector<moe::RoutingStats> routing;
    double aux = 0.0;
};

/// Inference forward pass: predicts v for x_t given the reference frame and
/// any number of conditions (zero conditions is the unconditional branch).
DenoiserResult forward_denoiser(const Video& x_t, std::size_t t, const Video& reference,
                                std::span<const ConditionPair> conditions, const DenoiserParams& params,
                                const ForwardOptions& options = {});

/// Token-level output of one attention sublayer, exposed for isolation tests:
/// runs block `block` attention (without residual) over pre-built tokens.
Tensor attention_sublayer(const DenoiserParams& params, std::size_t block, const Tensor& tokens,
                          const conditioning::TokenLayout& layout);

} // namespace omnifx::model
