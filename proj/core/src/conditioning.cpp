// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/conditioning.hpp"

#include "omnifx/error.hpp"

namespace omnifx::conditioning {

using numerics::Graph;
using numerics::Tensor;
using numerics::Var;

TokenLayout::TokenLayout(std::vector<ConditionSpans> conditions, Span latent)
    : conditions_(std::move(conditions)), latent_(latent) {}

Segment TokenLayout::segment_of(std::size_t token) const {
    if (latent_.contains(token)) {
        return Segment::Latent;
    }
    for (const auto& c : conditions_) {
        if (c.text.contains(token)) {
            return Segment::Text;
        }
        if (c.spatial.contains(token)) {
            return Segment::Spatial;
        }
    }
    throw Error("token " + std::to_string(token) + " outside layout of length " + std::to_string(length()));
}

std::optional<std::size_t> TokenLayout::condition_of(std::size_t token) const {
    for (std::size_t k = 0; k < conditions_.size(); ++k) {
        if (conditions_[k].text.contains(token) || conditions_[k].spatial.contains(token)) {
            return k;
        }
    }
    return std::nullopt;
}

TokenLayout build_layout(std::size_t n_conditions, std::size_t text_len, std::size_t spatial_len,
                         std::size_t latent_len) {
    if (latent_len == 0) {
        throw Error("build_layout: latent span must be non-empty");
    }
    if (n_conditions > 0 && (text_len == 0 || spatial_len == 0)) {
        throw Error("build_layout: text and spatial spans must be non-empty");
    }
    std::vector<ConditionSpans> spans;
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < n_conditions; ++k) {
        ConditionSpans c;
        c.text = {cursor, cursor + text_len};
        cursor += text_len;
        c.spatial = {cursor, cursor + spatial_len};
        cursor += spatial_len;
        spans.push_back(c);
    }
    return TokenLayout(std::move(spans), Span{cursor, cursor + latent_len});
}

IIFMask build_iif_mask(const TokenLayout& layout) {
    std::size_t l = layout.length();
    IIFMask mask(l);
    Span latent = layout.latent();
    for (const auto& c : layout.conditions()) {
        Span pair{c.text.begin, c.spatial.end};
        for (std::size_t i = pair.begin; i < pair.end; ++i) {
            for (std::size_t j = pair.begin; j < pair.end; ++j) {
                mask.set(i, j, true);
            }
        }
        for (std::size_t i = latent.begin; i < latent.end; ++i) {
            for (std::size_t j = c.text.begin; j < c.text.end; ++j) {
                mask.set(i, j, true);
            }
        }
    }
    for (std::size_t i = latent.begin; i < latent.end; ++i) {
        for (std::size_t j = latent.begin; j < latent.end; ++j) {
            mask.set(i, j, true);
        }
    }
    return mask;
}

numerics::AttentionMask full_attention_mask(std::size_t length) {
    return numerics::AttentionMask(length, true);
}

std::vector<Var> encode_text_conditions(std::span<const std::size_t> effect_ids, Var embed_table, Var positions) {
    std::size_t vocab = embed_table.value().rows();
    std::size_t text_len = positions.value().rows();
    if (positions.value().cols() != embed_table.value().cols()) {
        throw ShapeError("encode_text_conditions: embedding width " + numerics::to_string(embed_table.shape()) +
                         " vs positions " + numerics::to_string(positions.shape()));
    }
    std::vector<Var> blocks;
    for (std::size_t id : effect_ids) {
        if (id >= vocab) {
            throw Error("effect id " + std::to_string(id) + " outside vocabulary of size " + std::to_string(vocab));
        }
        std::vector<std::size_t> rows(text_len, id);
        blocks.push_back(numerics::add(numerics::gather_rows(embed_table, rows), positions));
    }
    return blocks;
}

std::vector<Tensor> encode_text_conditions(std::span<const std::size_t> effect_ids, const Tensor& embed_table,
                                           const Tensor& positions) {
    Graph graph;
    auto blocks = encode_text_conditions(effect_ids, graph.constant(embed_table), graph.constant(positions));
    std::vector<Tensor> out;
    for (const auto& b : blocks) {
        out.push_back(b.value());
    }
    return out;
}

std::vector<double> pool_mask(const Mask& mask, std::size_t patch) {
    if (patch == 0 || mask.height() % patch != 0 || mask.width() % patch != 0) {
        throw ShapeError("pool_mask: mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                         " not divisible by patch " + std::to_string(patch));
    }
    std::size_t gh = mask.height() / patch;
    std::size_t gw = mask.width() / patch;
    std::vector<double> pooled(gh * gw, 0.0);
    double area = static_cast<double>(patch * patch);
    for (std::size_t gy = 0; gy < gh; ++gy) {
        for (std::size_t gx = 0; gx < gw; ++gx) {
            std::size_t on = 0;
            for (std::size_t y = 0; y < patch; ++y) {
                for (std::size_t x = 0; x < patch; ++x) {
                    on += mask.at(gy * patch + y, gx * patch + x) ? 1 : 0;
                }
            }
            pooled[gy * gw + gx] = static_cast<double>(on) / area;
        }
    }
    return pooled;
}

std::vector<Var> encode_spatial_conditions(std::span<const Mask> masks, std::size_t patch, Var proj_weight,
                                           Var proj_bias, const Tensor& first_frame_pos) {
    Graph& graph = *proj_weight.graph();
    std::vector<Var> blocks;
    for (const Mask& m : masks) {
        std::vector<double> pooled = pool_mask(m, patch);
        if (pooled.size() != first_frame_pos.rows()) {
            throw ShapeError("encode_spatial_conditions: " + std::to_string(pooled.size()) +
                             " pooled cells vs positional rows " + numerics::to_string(first_frame_pos.shape()));
        }
        std::size_t cells = pooled.size();
        Var column = graph.constant(Tensor({cells, 1}, std::move(pooled)));
        Var projected = numerics::add_row(numerics::matmul(column, proj_weight), proj_bias);
        blocks.push_back(numerics::add(projected, graph.constant(first_frame_pos)));
    }
    return blocks;
}

std::vector<Tensor> encode_spatial_conditions(std::span<const Mask> masks, std::size_t patch,
                                              const Tensor& proj_weight, const Tensor& proj_bias,
                                              const Tensor& first_frame_pos) {
    Graph graph;
    auto blocks = encode_spatial_conditions(masks, patch, graph.constant(proj_weight), graph.constant(proj_bias),
                                            first_frame_pos);
    std::vector<Tensor> out;
    for (const auto& b : blocks) {
        out.push_back(b.value());
    }
    return out;
}

} // namespace omnifx::conditioning
