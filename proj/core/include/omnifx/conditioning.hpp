// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "omnifx/numerics/autograd.hpp"
#include "omnifx/video.hpp"

namespace omnifx::conditioning {

/// One spatially triggered effect: descriptor index plus its H×W trigger mask.
struct ConditionPair {
    std::size_t effect_id = 0;
    Mask mask;

    friend bool operator==(const ConditionPair&, const ConditionPair&) = default;
};

/// Half-open token index range.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
    friend bool operator==(const Span&, const Span&) = default;
};

enum class Segment { Text, Spatial, Latent };

struct ConditionSpans {
    Span text;
    Span spatial;
};

/// Segment map of the concatenated sequence
/// [text_1, spatial_1, ..., text_N, spatial_N, latent].
class TokenLayout {
public:
    TokenLayout(std::vector<ConditionSpans> conditions, Span latent);

    const std::vector<ConditionSpans>& conditions() const { return conditions_; }
    std::size_t condition_count() const { return conditions_.size(); }
    Span latent() const { return latent_; }
    std::size_t length() const { return latent_.end; }

    Segment segment_of(std::size_t token) const;
    /// Condition pair owning `token`, or nothing for latent tokens.
    std::optional<std::size_t> condition_of(std::size_t token) const;

private:
    std::vector<ConditionSpans> conditions_;
    Span latent_;
};

TokenLayout build_layout(std::size_t n_conditions, std::size_t text_len, std::size_t spatial_len,
                         std::size_t latent_len);

using IIFMask = numerics::AttentionMask;

/// Independent-information-flow mask: a token may attend to another token of
/// its own condition pair, and latent tokens may attend to latent tokens and
/// to every text token. Everything else is blocked.
IIFMask build_iif_mask(const TokenLayout& layout);

/// Unrestricted self-attention over `length` tokens (the mask ablation).
numerics::AttentionMask full_attention_mask(std::size_t length);

/// Per-condition text blocks: T_e copies of the effect's embedding row plus
/// the positional block shared by every condition.
std::vector<numerics::Var> encode_text_conditions(std::span<const std::size_t> effect_ids, numerics::Var embed_table,
                                                  numerics::Var positions);
std::vector<numerics::Tensor> encode_text_conditions(std::span<const std::size_t> effect_ids,
                                                     const numerics::Tensor& embed_table,
                                                     const numerics::Tensor& positions);

/// Area-average of a mask over the non-overlapping patch×patch grid,
/// row-major, one value per first-frame patch.
std::vector<double> pool_mask(const Mask& mask, std::size_t patch);

/// Spatial blocks: pooled mask values projected to the model width through a
/// single shared (weight, bias) pair, plus first-frame positional rows.
std::vector<numerics::Var> encode_spatial_conditions(std::span<const Mask> masks, std::size_t patch,
                                                     numerics::Var proj_weight, numerics::Var proj_bias,
                                                     const numerics::Tensor& first_frame_pos);
std::vector<numerics::Tensor> encode_spatial_conditions(std::span<const Mask> masks, std::size_t patch,
                                                        const numerics::Tensor& proj_weight,
                                                        const numerics::Tensor& proj_bias,
                                                        const numerics::Tensor& first_frame_pos);

} // namespace omnifx::conditioning
