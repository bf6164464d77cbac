// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/model.hpp"

#include <cmath>

#include "omnifx/error.hpp"

namespace omnifx::model {

namespace nx = omnifx::numerics;

namespace {

std::string block_prefix(std::size_t b) {
    return "block" + std::to_string(b) + ".";
}

void fill_gaussian(Tensor& t, Rng& rng, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    for (auto& v : t.values()) {
        v = normal(rng);
    }
}

Tensor gaussian(nx::Shape shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    fill_gaussian(t, rng, stddev);
    return t;
}

void add_moe_layer(ParameterSet& out, const std::string& prefix, const moe::MoELayerParams& layer) {
    out[prefix + "base.weight"] = layer.base_weight;
    out[prefix + "base.bias"] = layer.base_bias;
    out[prefix + "gate"] = layer.gate_weight;
    for (std::size_t i = 0; i < layer.experts.size(); ++i) {
        out[prefix + "expert" + std::to_string(i) + ".a"] = layer.experts[i].a;
        out[prefix + "expert" + std::to_string(i) + ".b"] = layer.experts[i].b;
    }
}

moe::MoELayerVars bind_moe_layer(const BoundParams& p, const std::string& prefix, const ModelConfig& config) {
    moe::MoELayerVars layer;
    layer.base_weight = p[prefix + "base.weight"];
    layer.base_bias = p[prefix + "base.bias"];
    layer.gate_weight = p[prefix + "gate"];
    for (std::size_t i = 0; i < config.moe.experts; ++i) {
        layer.experts.push_back(
            {p[prefix + "expert" + std::to_string(i) + ".a"], p[prefix + "expert" + std::to_string(i) + ".b"],
             config.moe.alpha});
    }
    return layer;
}

Var lora(Var x, Var a, Var b, double alpha) {
    double r = static_cast<double>(a.value().cols());
    return nx::scale(nx::matmul(nx::matmul(x, a), b), alpha / r);
}

/// Rows that belong to spatial-condition spans get the shared spatial LoRA;
/// every other row gets the base LoRA.
struct RowRouting {
    Var spatial_rows;  // l×1 indicator, constant
    Var other_rows;    // l×1 complement, constant
    bool has_spatial = false;
};

RowRouting make_row_routing(Graph& graph, const conditioning::TokenLayout& layout) {
    std::size_t l = layout.length();
    Tensor spatial({l, 1}, 0.0);
    Tensor other({l, 1}, 1.0);
    RowRouting routing;
    for (const auto& c : layout.conditions()) {
        for (std::size_t i = c.spatial.begin; i < c.spatial.end; ++i) {
            spatial[i] = 1.0;
            other[i] = 0.0;
            routing.has_spatial = true;
        }
    }
    routing.spatial_rows = graph.constant(std::move(spatial));
    routing.other_rows = graph.constant(std::move(other));
    return routing;
}

Var projection(Var x, const BoundParams& p, const std::string& name, const ModelConfig& config,
               const RowRouting& routing, bool spatial_lora) {
    Var base = nx::matmul(x, p[name + ".weight"]);
    Var base_lora = lora(x, p[name + ".lora.a"], p[name + ".lora.b"], config.attn_lora_alpha);
    if (!spatial_lora || !routing.has_spatial) {
        return nx::add(base, base_lora);
    }
    Var spatial = lora(x, p[name + ".spatial_lora.a"], p[name + ".spatial_lora.b"], config.attn_lora_alpha);
    Var mixed = nx::add(nx::row_scale(base_lora, routing.other_rows), nx::row_scale(spatial, routing.spatial_rows));
    return nx::add(base, mixed);
}

Var attention(Var x, const BoundParams& p, std::size_t block, const ModelConfig& config,
              const nx::AttentionMask& mask, const RowRouting& routing) {
    std::string prefix = block_prefix(block) + "attn.";
    Var q = projection(x, p, prefix + "q", config, routing, true);
    Var k = projection(x, p, prefix + "k", config, routing, true);
    Var v = projection(x, p, prefix + "v", config, routing, true);

    std::size_t dk = config.head_dim();
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
    std::vector<Var> heads;
    for (std::size_t h = 0; h < config.heads; ++h) {
        Var qh = nx::slice_cols(q, h * dk, (h + 1) * dk);
        Var kh = nx::slice_cols(k, h * dk, (h + 1) * dk);
        Var vh = nx::slice_cols(v, h * dk, (h + 1) * dk);
        Var scores = nx::scale(nx::matmul(qh, nx::transpose(kh)), inv_sqrt);
        heads.push_back(nx::matmul(nx::masked_softmax_rows(scores, mask), vh));
    }
    Var merged = heads.size() == 1 ? heads.front() : nx::concat_cols(heads);
    return projection(merged, p, prefix + "o", config, routing, false);
}

nx::AttentionMask mask_for(const ModelConfig& config, const conditioning::TokenLayout& layout) {
    return config.attention == AttentionMaskMode::Iif ? conditioning::build_iif_mask(layout)
                                                      : conditioning::full_attention_mask(layout.length());
}

} // namespace

ModelConfig ModelConfig::toy() {
    return ModelConfig{};
}

void ModelConfig::validate() const {
    if (frames == 0 || height == 0 || width == 0 || channels == 0 || patch == 0) {
        throw Error("model extents must be positive");
    }
    if (height % patch != 0 || width % patch != 0) {
        throw Error("frame " + std::to_string(height) + "x" + std::to_string(width) + " not divisible by patch " +
                    std::to_string(patch));
    }
    if (dim == 0 || heads == 0 || dim % heads != 0) {
        throw Error("model dim " + std::to_string(dim) + " not divisible by heads " + std::to_string(heads));
    }
    if (blocks == 0 || ffn_hidden == 0 || text_len == 0 || vocab == 0 || attn_lora_rank == 0) {
        throw Error("model sizes must be positive");
    }
    if (timesteps < 2) {
        throw Error("timesteps must be at least 2");
    }
    moe.validate();
}

std::size_t DenoiserParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors) {
        n += t.size();
    }
    return n;
}

DenoiserParams init_denoiser(const ModelConfig& config, Rng& rng) {
    config.validate();
    std::size_t d = config.dim;
    std::size_t pd = config.patch_dim();
    std::size_t r = config.attn_lora_rank;
    double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    DenoiserParams params;
    params.config = config;
    ParameterSet& t = params.tensors;
    t["patch_in.weight"] = gaussian({2 * pd, d}, rng, 1.0 / std::sqrt(static_cast<double>(2 * pd)));
    t["patch_in.bias"] = Tensor({1, d}, 0.0);
    t["time.weight"] = gaussian({d, d}, rng, inv_sqrt_d);
    t["time.bias"] = Tensor({1, d}, 0.0);
    t["effect.table"] = gaussian({config.vocab, d}, rng, 1.0);
    t["text.pos"] = gaussian({config.text_len, d}, rng, 0.1);
    t["spatial.weight"] = gaussian({1, d}, rng, 1.0);
    t["spatial.bias"] = Tensor({1, d}, 0.0);

    for (std::size_t b = 0; b < config.blocks; ++b) {
        std::string prefix = block_prefix(b) + "attn.";
        for (const char* proj : {"q", "k", "v", "o"}) {
            std::string name = prefix + proj;
            t[name + ".weight"] = gaussian({d, d}, rng, inv_sqrt_d);
            t[name + ".lora.a"] = gaussian({d, r}, rng, 0.02);
            t[name + ".lora.b"] = Tensor({r, d}, 0.0);
            if (std::string(proj) != "o") {
                t[name + ".spatial_lora.a"] = gaussian({d, r}, rng, 0.02);
                t[name + ".spatial_lora.b"] = Tensor({r, d}, 0.0);
            }
        }
        add_moe_layer(t, block_prefix(b) + "ffn.up.", moe::init_moe_layer(d, config.ffn_hidden, config.moe, rng));
        add_moe_layer(t, block_prefix(b) + "ffn.down.",
                      moe::init_moe_layer(config.ffn_hidden, d, config.moe, rng));
    }
    t["patch_out.weight"] = gaussian({d, pd}, rng, 0.1 * inv_sqrt_d);
    t["patch_out.bias"] = Tensor({1, pd}, 0.0);
    return params;
}

Tensor patchify(const Video& video, std::size_t patch) {
    if (patch == 0 || video.height() % patch != 0 || video.width() % patch != 0) {
        throw ShapeError("patchify: " + std::to_string(video.height()) + "x" + std::to_string(video.width()) +
                         " not divisible by patch " + std::to_string(patch));
    }
    std::size_t gh = video.height() / patch;
    std::size_t gw = video.width() / patch;
    std::size_t c = video.channels();
    Tensor tokens({video.frames() * gh * gw, patch * patch * c});
    for (std::size_t f = 0; f < video.frames(); ++f) {
        for (std::size_t gy = 0; gy < gh; ++gy) {
            for (std::size_t gx = 0; gx < gw; ++gx) {
                std::size_t row = (f * gh + gy) * gw + gx;
                for (std::size_t py = 0; py < patch; ++py) {
                    for (std::size_t px = 0; px < patch; ++px) {
                        for (std::size_t ch = 0; ch < c; ++ch) {
                            tokens(row, (py * patch + px) * c + ch) = video.at(f, gy * patch + py, gx * patch + px, ch);
                        }
                    }
                }
            }
        }
    }
    return tokens;
}

Video unpatchify(const Tensor& tokens, std::size_t frames, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t patch) {
    if (patch == 0 || height % patch != 0 || width % patch != 0) {
        throw ShapeError("unpatchify: extents not divisible by patch");
    }
    std::size_t gh = height / patch;
    std::size_t gw = width / patch;
    if (tokens.rows() != frames * gh * gw || tokens.cols() != patch * patch * channels) {
        throw ShapeError("unpatchify: token matrix " + nx::to_string(tokens.shape()) + " does not match video");
    }
    Video video(frames, height, width, channels);
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t gy = 0; gy < gh; ++gy) {
            for (std::size_t gx = 0; gx < gw; ++gx) {
                std::size_t row = (f * gh + gy) * gw + gx;
                for (std::size_t py = 0; py < patch; ++py) {
                    for (std::size_t px = 0; px < patch; ++px) {
                        for (std::size_t ch = 0; ch < channels; ++ch) {
                            video.at(f, gy * patch + py, gx * patch + px, ch) = tokens(row, (py * patch + px) * channels + ch);
                        }
                    }
                }
            }
        }
    }
    return video;
}

std::vector<double> sinusoidal_embedding(double position, std::size_t dim) {
    std::vector<double> e(dim, 0.0);
    for (std::size_t i = 0; 2 * i + 1 < dim; ++i) {
        double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
        e[2 * i] = std::sin(position * freq);
        e[2 * i + 1] = std::cos(position * freq);
    }
    return e;
}

Tensor positional_table(const ModelConfig& config) {
    std::size_t d = config.dim;
    std::size_t axis = 2 * (d / 6);
    std::size_t frame_dim = d - 2 * axis;
    std::size_t gh = config.grid_h();
    std::size_t gw = config.grid_w();
    Tensor table({config.latent_len(), d});
    for (std::size_t f = 0; f < config.frames; ++f) {
        auto ef = sinusoidal_embedding(static_cast<double>(f), frame_dim);
        for (std::size_t gy = 0; gy < gh; ++gy) {
            auto ey = sinusoidal_embedding(static_cast<double>(gy), axis);
            for (std::size_t gx = 0; gx < gw; ++gx) {
                auto ex = sinusoidal_embedding(static_cast<double>(gx), axis);
                std::size_t row = (f * gh + gy) * gw + gx;
                std::size_t col = 0;
                for (double v : ef) {
                    table(row, col++) = v;
                }
                for (double v : ey) {
                    table(row, col++) = v;
                }
                for (double v : ex) {
                    table(row, col++) = v;
                }
            }
        }
    }
    return table;
}

Tensor first_frame_positions(const ModelConfig& config) {
    Tensor table = positional_table(config);
    std::size_t sp = config.spatial_len();
    return Tensor({sp, config.dim}, std::vector<double>(table.data(), table.data() + sp * config.dim));
}

BoundParams::BoundParams(Graph& graph, const ParameterSet& params, bool trainable) {
    for (const auto& [name, tensor] : params) {
        vars_.emplace(name, trainable ? graph.variable(tensor) : graph.constant(tensor));
    }
}

Var BoundParams::operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) {
        throw Error("missing parameter '" + name + "'");
    }
    return it->second;
}

ParameterSet BoundParams::gradients() const {
    ParameterSet out;
    for (const auto& [name, var] : vars_) {
        out[name] = var.grad();
    }
    return out;
}

Var time_embed(Graph& graph, const BoundParams& params, const ModelConfig& config, std::size_t t) {
    if (t < 1 || t > config.timesteps) {
        throw Error("timestep " + std::to_string(t) + " outside [1, " + std::to_string(config.timesteps) + "]");
    }
    Tensor sinusoid({1, config.dim}, sinusoidal_embedding(static_cast<double>(t), config.dim));
    return nx::add_row(nx::matmul(graph.constant(std::move(sinusoid)), params["time.weight"]), params["time.bias"]);
}

Tensor time_embed(const DenoiserParams& params, std::size_t t) {
    Graph graph;
    BoundParams bound(graph, params.tensors, false);
    return time_embed(graph, bound, params.config, t).value();
}

DenoiserGraphOutput denoise(Graph& graph, const BoundParams& p, const ModelConfig& config, const Video& x_t,
                            std::size_t t, const Video& reference, std::span<const ConditionPair> conditions,
                            const ForwardOptions& options) {
    if (x_t.frames() != config.frames || x_t.height() != config.height || x_t.width() != config.width ||
        x_t.channels() != config.channels) {
        throw ShapeError("denoise: x_t extents do not match the model configuration");
    }
    if (reference.frames() < 1 || reference.height() != config.height || reference.width() != config.width ||
        reference.channels() != config.channels) {
        throw ShapeError("denoise: reference frame extents do not match the model configuration");
    }
    for (const auto& c : conditions) {
        if (c.mask.height() != config.height || c.mask.width() != config.width) {
            throw ShapeError("denoise: condition mask extents do not match the video frame");
        }
    }

    // Latent tokens: noisy patches alongside reference-frame patches.
    Var noisy = graph.constant(patchify(x_t, config.patch));
    Var ref = graph.constant(patchify(reference.repeat_frame(0, config.frames), config.patch));
    const Var latent_in[] = {noisy, ref};
    Var latent = nx::add_row(nx::matmul(nx::concat_cols(latent_in), p["patch_in.weight"]), p["patch_in.bias"]);
    latent = nx::add(latent, graph.constant(positional_table(config)));
    latent = nx::add_row(latent, time_embed(graph, p, config, t));

    std::vector<std::size_t> ids;
    std::vector<Mask> masks;
    for (const auto& c : conditions) {
        ids.push_back(c.effect_id);
        masks.push_back(c.mask);
    }
    auto text = conditioning::encode_text_conditions(ids, p["effect.table"], p["text.pos"]);
    auto spatial = conditioning::encode_spatial_conditions(masks, config.patch, p["spatial.weight"],
                                                           p["spatial.bias"], first_frame_positions(config));
    std::vector<Var> sequence;
    for (std::size_t k = 0; k < conditions.size(); ++k) {
        sequence.push_back(text[k]);
        sequence.push_back(spatial[k]);
    }
    sequence.push_back(latent);
    Var h = sequence.size() == 1 ? latent : nx::concat_rows(sequence);

    auto layout = conditioning::build_layout(conditions.size(), config.text_len, config.spatial_len(),
                                             config.latent_len());
    nx::AttentionMask mask = mask_for(config, layout);
    RowRouting routing = make_row_routing(graph, layout);

    DenoiserGraphOutput out;
    Var aux_total;
    for (std::size_t b = 0; b < config.blocks; ++b) {
        h = nx::add(h, attention(nx::layer_norm_rows(h), p, b, config, mask, routing));

        Var normed = nx::layer_norm_rows(h);
        auto up = moe::moe_forward(normed, bind_moe_layer(p, block_prefix(b) + "ffn.up.", config),
                                   config.moe.top_k, options.routing);
        auto down = moe::moe_forward(nx::gelu(up.y), bind_moe_layer(p, block_prefix(b) + "ffn.down.", config),
                                     config.moe.top_k, options.routing);
        h = nx::add(h, down.y);

        Var layer_aux = nx::add(up.aux, down.aux);
        aux_total = aux_total.valid() ? nx::add(aux_total, layer_aux) : layer_aux;
        out.routing.push_back(std::move(up.stats));
        out.routing.push_back(std::move(down.stats));
    }
    out.aux = nx::scale(aux_total, 1.0 / static_cast<double>(2 * config.blocks));

    Var final_latent = nx::slice_rows(nx::layer_norm_rows(h), layout.latent().begin, layout.latent().end);
    out.v_tokens = nx::add_row(nx::matmul(final_latent, p["patch_out.weight"]), p["patch_out.bias"]);
    return out;
}

DenoiserResult forward_denoiser(const Video& x_t, std::size_t t, const Video& reference,
                                std::span<const ConditionPair> conditions, const DenoiserParams& params,
                                const ForwardOptions& options) {
    const ModelConfig& config = params.config;
    Graph graph;
    BoundParams bound(graph, params.tensors, false);
    auto out = denoise(graph, bound, config, x_t, t, reference, conditions, options);
    DenoiserResult result;
    result.v = unpatchify(out.v_tokens.value(), config.frames, config.height, config.width, config.channels,
                          config.patch);
    result.routing = std::move(out.routing);
    result.aux = out.aux.value()[0];
    return result;
}

Tensor attention_sublayer(const DenoiserParams& params, std::size_t block, const Tensor& tokens,
                          const conditioning::TokenLayout& layout) {
    const ModelConfig& config = params.config;
    if (tokens.rows() != layout.length() || tokens.cols() != config.dim) {
        throw ShapeError("attention_sublayer: tokens " + nx::to_string(tokens.shape()) + " vs layout length " +
                         std::to_string(layout.length()));
    }
    Graph graph;
    BoundParams bound(graph, params.tensors, false);
    RowRouting routing = make_row_routing(graph, layout);
    return attention(graph.constant(tokens), bound, block, config, mask_for(config, layout), routing).value();
}

} // namespace omnifx::model
