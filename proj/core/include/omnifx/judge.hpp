// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include "omnifx/metrics.hpp"
#include "omnifx/synthvfx.hpp"
#include "omnifx/video.hpp"

namespace omnifx::metrics {

using synth::EffectKind;

enum class Vote { Yes, No, Error };

std::string_view vote_name(Vote vote);

struct JudgeVerdict {
    bool answer = false;
    bool evaluable = false;
    std::array<Vote, 3> votes{Vote::Error, Vote::Error, Vote::Error};
};

/// Reduces three votes: fewer than two valid votes is unevaluable, and a
/// one-one split among two valid votes is "no".
JudgeVerdict majority(const std::array<Vote, 3>& votes);

/// Something that can be asked "does this video show `effect` inside `mask`?".
/// Implementations must be safe to call from several threads at once.
class Judge {
public:
    virtual ~Judge() = default;
    virtual Vote ask(const Video& video, EffectKind effect, const Mask& mask) = 0;
};

struct ProceduralJudgeConfig {
    double fade_ratio = 0.3;
    double fade_slack = 0.02;
    double invert_correlation = -0.5;
    double grow_ratio = 1.5;
    double bright_level = 0.5;
    /// Fraction of first-frame bright pixels that must still be bright at the end of a Grow.
    double grow_retained = 0.9;
    double blink_deadband = 0.02;
    std::size_t blink_changes = 2;
};

/// Signature test for one effect inside one mask.
bool procedural_judge(const Video& video, EffectKind effect, const Mask& mask, const ProceduralJudgeConfig& config = {});

class ProceduralJudge final : public Judge {
public:
    explicit ProceduralJudge(ProceduralJudgeConfig config = {}) : config_(config) {}
    Vote ask(const Video& video, EffectKind effect, const Mask& mask) override;

private:
    ProceduralJudgeConfig config_;
};

/// Adapts a callable; handy for mocks.
class FunctionJudge final : public Judge {
public:
    using Fn = std::function<Vote(const Video&, EffectKind, const Mask&)>;
    explicit FunctionJudge(Fn fn) : fn_(std::move(fn)) {}
    Vote ask(const Video& video, EffectKind effect, const Mask& mask) override { return fn_(video, effect, mask); }

private:
    Fn fn_;
};

/// Three queries, majority answer. A throwing judge counts as an error vote.
JudgeVerdict eor(const Video& video, EffectKind effect, const Mask& mask, Judge& judge);

/// Every metric for one video. EOR is "yes" only when every condition is
/// confirmed; any unevaluable condition makes the sample unevaluable.
MetricReport evaluate_sample(const std::string& id, const Video& video,
                             std::span<const conditioning::ConditionPair> conditions, Judge* judge,
                             const EcrThresholds& thresholds = {}, const FlowConfig& flow = {});

} // namespace omnifx::metrics
