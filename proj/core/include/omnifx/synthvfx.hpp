// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omnifx/conditioning.hpp"
#include "omnifx/video.hpp"

namespace omnifx::synth {

using conditioning::ConditionPair;

enum class EffectKind { Fade, Invert, Grow, Blink };

inline constexpr std::array<EffectKind, 4> kAllEffects = {EffectKind::Fade, EffectKind::Invert, EffectKind::Grow,
                                                          EffectKind::Blink};

std::string_view effect_name(EffectKind kind);
/// Case-sensitive lowercase name lookup ("fade", "invert", "grow", "blink").
EffectKind parse_effect(std::string_view name);
/// Descriptor id used as the effect-embedding row.
std::size_t effect_id(EffectKind kind);
EffectKind effect_from_id(std::size_t id);

struct SceneConfig {
    std::size_t frames = 8;
    std::size_t height = 24;
    std::size_t width = 24;
    std::size_t channels = 1;
    double background = 0.1;
    double peak = 0.9;
    double min_radius = 2.0;
    double max_radius = 3.0;
    /// Probability of a second, unaffected blob outside the mask.
    double second_blob = 0.5;

    void validate() const;
};

enum class Category { Plain, CropSplice1, CropSplice2 };

std::string_view category_name(Category category);

struct Provenance {
    Category category = Category::Plain;
    /// Per spliced segment (left, right); empty for plain records.
    std::vector<bool> frozen;
    std::size_t cut = 0;
    /// Horizontal source offset of each spliced segment.
    std::vector<long> offsets;

    /// e.g. "plain", "crop-splice-2", "crop-splice-1;frozen=0,1"
    std::string tag() const;
    static Provenance parse(std::string_view tag);

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct SampleRecord {
    Video reference;
    std::vector<ConditionPair> conditions;
    Video target;
    Provenance provenance;

    std::vector<EffectKind> effects() const;
    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// One procedurally animated effect around a blob, the rest of the frame static.
SampleRecord render_sample(EffectKind effect, Rng& rng, const SceneConfig& config = {});

struct AugmentConfig {
    double plain = 0.2;
    double splice_one = 0.4; // remaining mass is the two-effect splice
    double freeze = 0.2;

    void validate() const;
};

/// Pseudo multi-effect record built from a pool of plain single-effect records.
SampleRecord augment_batch(std::span<const SampleRecord> pool, Rng& rng, const AugmentConfig& config = {});

/// Splices columns [0, cut) of `left` (shifted by offsets[0]) with columns
/// [cut, W) of `right` (shifted by offsets[1]). Exposed for tests and tools.
SampleRecord splice(const SampleRecord& left, const SampleRecord& right, std::size_t cut, long left_offset,
                    long right_offset);

/// Replaces segment `index` of a spliced record with its first frame and
/// clears its mask.
void freeze_segment(SampleRecord& record, std::size_t index);

struct DatasetMix {
    std::vector<EffectKind> kinds{kAllEffects.begin(), kAllEffects.end()};
};

/// Round-robin over `mix.kinds`; each record gets its own seed drawn from `rng`.
std::vector<SampleRecord> make_dataset(std::size_t count, const DatasetMix& mix, Rng& rng,
                                       const SceneConfig& config = {});

} // namespace omnifx::synth
