// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/judge.hpp"

#include <cmath>
#include <exception>

#include "omnifx/error.hpp"

namespace omnifx::metrics {

namespace {

std::vector<double> masked_values(const Video& video, std::size_t f, const Mask& mask) {
    auto lum = video.luminance(f);
    std::vector<double> out;
    for (std::size_t i = 0; i < lum.size(); ++i) {
        if (mask.cells()[i]) {
            out.push_back(lum[i]);
        }
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = mean_of(a);
    double mb = mean_of(b);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 1e-18 || sbb <= 1e-18) {
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace

std::string_view vote_name(Vote vote) {
    switch (vote) {
    case Vote::Yes:
        return "yes";
    case Vote::No:
        return "no";
    case Vote::Error:
        return "error";
    }
    return "error";
}

JudgeVerdict majority(const std::array<Vote, 3>& votes) {
    JudgeVerdict v;
    v.votes = votes;
    int yes = 0;
    int no = 0;
    for (Vote x : votes) {
        yes += x == Vote::Yes;
        no += x == Vote::No;
    }
    v.evaluable = yes + no >= 2;
    v.answer = v.evaluable && yes > no;
    return v;
}

bool procedural_judge(const Video& video, EffectKind effect, const Mask& mask, const ProceduralJudgeConfig& config) {
    if (mask.height() != video.height() || mask.width() != video.width()) {
        throw ShapeError("procedural_judge: mask extents differ from the video");
    }
    if (mask.empty()) {
        throw Error("procedural_judge: empty mask");
    }
    if (video.frames() < 2) {
        return false;
    }
    const std::size_t last = video.frames() - 1;
    switch (effect) {
    case EffectKind::Fade: {
        std::vector<double> means;
        for (std::size_t f = 0; f <= last; ++f) {
            means.push_back(mean_of(masked_values(video, f, mask)));
        }
        if (!(means[0] > 1e-9) || means[last] > config.fade_ratio * means[0]) {
            return false;
        }
        for (std::size_t f = 0; f < last; ++f) {
            if (means[f + 1] > means[f] + config.fade_slack) {
                return false;
            }
        }
        return true;
    }
    case EffectKind::Invert:
        return pearson(masked_values(video, 0, mask), masked_values(video, last, mask)) <= config.invert_correlation;
    case EffectKind::Grow: {
        auto first = masked_values(video, 0, mask);
        auto end = masked_values(video, last, mask);
        std::size_t bright_first = 0;
        std::size_t bright_last = 0;
        std::size_t retained = 0;
        for (std::size_t i = 0; i < first.size(); ++i) {
            bool a = first[i] > config.bright_level;
            bool b = end[i] > config.bright_level;
            bright_first += a;
            bright_last += b;
            retained += a && b;
        }
        if (bright_first == 0) {
            return false;
        }
        double n = static_cast<double>(bright_first);
        return static_cast<double>(bright_last) >= config.grow_ratio * n &&
               static_cast<double>(retained) >= config.grow_retained * n;
    }
    case EffectKind::Blink: {
        std::vector<double> means;
        for (std::size_t f = 0; f <= last; ++f) {
            means.push_back(mean_of(masked_values(video, f, mask)));
        }
        int previous = 0;
        std::size_t changes = 0;
        for (std::size_t f = 0; f < last; ++f) {
            double d = means[f + 1] - means[f];
            int sign = d > config.blink_deadband ? 1 : (d < -config.blink_deadband ? -1 : 0);
            if (sign == 0) {
                continue;
            }
            if (previous != 0 && sign != previous) {
                ++changes;
            }
            previous = sign;
        }
        return changes >= config.blink_changes;
    }
    }
    throw Error("procedural_judge: unknown effect kind");
}

Vote ProceduralJudge::ask(const Video& video, EffectKind effect, const Mask& mask) {
    return procedural_judge(video, effect, mask, config_) ? Vote::Yes : Vote::No;
}

JudgeVerdict eor(const Video& video, EffectKind effect, const Mask& mask, Judge& judge) {
    std::array<Vote, 3> votes{};
    for (auto& vote : votes) {
        try {
            vote = judge.ask(video, effect, mask);
        } catch (const std::exception&) {
            vote = Vote::Error;
        }
    }
    return majority(votes);
}

MetricReport evaluate_sample(const std::string& id, const Video& video,
                             std::span<const conditioning::ConditionPair> conditions, Judge* judge,
                             const EcrThresholds& thresholds, const FlowConfig& flow) {
    MetricReport report;
    report.id = id;
    Mask region = condition_union(conditions, video.height(), video.width());
    report.rdd = rdd(video, region, flow);
    EcrResult ecr = ecr_single(video, region, thresholds);
    report.inner_diff = ecr.inner_diff;
    report.outer_diff = ecr.outer_diff;
    report.controllable = ecr.controllable;
    report.dynamic_degree = dynamic_degree(video, flow);
    if (judge != nullptr) {
        bool all_yes = true;
        bool evaluable = true;
        for (const auto& c : conditions) {
            if (c.mask.empty()) {
                continue;
            }
            JudgeVerdict v = eor(video, synth::effect_from_id(c.effect_id), c.mask, *judge);
            evaluable = evaluable && v.evaluable;
            all_yes = all_yes && v.answer;
        }
        if (evaluable) {
            report.eor = all_yes;
        }
    }
    return report;
}

} // namespace omnifx::metrics
