// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "omnifx/error.hpp"

namespace omnifx::metrics {

namespace {

void require_mask_extents(const Video& video, const Mask& mask, const char* op) {
    if (mask.height() != video.height() || mask.width() != video.width()) {
        throw ShapeError(std::string(op) + ": mask is " + std::to_string(mask.height()) + "x" +
                         std::to_string(mask.width()) + " but frames are " + std::to_string(video.height()) + "x" +
                         std::to_string(video.width()));
    }
}

std::size_t kept(std::size_t n, double fraction) {
    auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, n == 0 ? 0 : 1, n);
}

/// Mean of squares of the first `k` entries after ordering by value
/// (descending when `largest`), ties broken by ascending pixel index.
double mean_square_extreme(std::vector<std::pair<double, std::size_t>> diffs, double fraction, bool largest) {
    std::sort(diffs.begin(), diffs.end(), [largest](const auto& a, const auto& b) {
        if (a.first != b.first) {
            return largest ? a.first > b.first : a.first < b.first;
        }
        return a.second < b.second;
    });
    std::size_t k = kept(diffs.size(), fraction);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sum += diffs[i].first * diffs[i].first;
    }
    return sum / static_cast<double>(k);
}

} // namespace

double rdd(const Video& video, const Mask& mask, const FlowConfig& config) {
    require_mask_extents(video, mask, "rdd");
    if (mask.empty()) {
        throw Error("rdd: empty region");
    }
    if (video.frames() < 2) {
        throw Error("rdd: need at least two frames");
    }
    double total = 0.0;
    double region = static_cast<double>(mask.count());
    for (std::size_t f = 0; f + 1 < video.frames(); ++f) {
        FlowField flow = estimate_flow(video, f, f + 1, config);
        double sum = 0.0;
        for (std::size_t y = 0; y < video.height(); ++y) {
            for (std::size_t x = 0; x < video.width(); ++x) {
                if (mask.at(y, x)) {
                    sum += flow.magnitude(y, x);
                }
            }
        }
        total += sum / region;
    }
    return total / static_cast<double>(video.frames() - 1);
}

double dynamic_degree(const Video& video, const FlowConfig& config) {
    return rdd(video, Mask(video.height(), video.width(), true), config);
}

EcrResult ecr_single(const Video& video, const Mask& mask, const EcrThresholds& thresholds) {
    require_mask_extents(video, mask, "ecr_single");
    if (mask.empty() || mask.full()) {
        throw Error("ecr_single: mask must be neither empty nor the whole frame");
    }
    if (!(thresholds.keep_fraction > 0.0 && thresholds.keep_fraction <= 1.0)) {
        throw Error("ecr_single: keep fraction must lie in (0, 1]");
    }
    auto first = video.luminance(0);
    auto last = video.luminance(video.frames() - 1);
    std::vector<std::pair<double, std::size_t>> inner;
    std::vector<std::pair<double, std::size_t>> outer;
    for (std::size_t i = 0; i < first.size(); ++i) {
        double d = std::abs(last[i] - first[i]);
        (mask.cells()[i] ? inner : outer).emplace_back(d, i);
    }
    EcrResult r;
    r.inner_diff = mean_square_extreme(std::move(inner), thresholds.keep_fraction, true);
    r.outer_diff = mean_square_extreme(std::move(outer), thresholds.keep_fraction, false);
    r.controllable = r.inner_diff < thresholds.inner && r.outer_diff < thresholds.outer;
    return r;
}

Mask condition_union(std::span<const conditioning::ConditionPair> conditions, std::size_t height, std::size_t width) {
    Mask out(height, width);
    for (const auto& c : conditions) {
        if (c.mask.height() != height || c.mask.width() != width) {
            throw ShapeError("condition mask extents differ from the video");
        }
        out = out.united(c.mask);
    }
    return out;
}

RateSummary summarize(std::span<const MetricReport> reports) {
    RateSummary s;
    s.samples = reports.size();
    double rdd_sum = 0.0;
    for (const auto& r : reports) {
        rdd_sum += r.rdd;
        if (!r.eor.has_value()) {
            continue;
        }
        ++s.evaluable;
        if (*r.eor) {
            ++s.detected;
            if (r.controllable) {
                ++s.controllable;
            }
        }
    }
    s.eor_rate = s.evaluable == 0 ? 0.0 : static_cast<double>(s.detected) / static_cast<double>(s.evaluable);
    s.ecr_rate = s.detected == 0 ? 0.0 : static_cast<double>(s.controllable) / static_cast<double>(s.detected);
    s.mean_rdd = reports.empty() ? 0.0 : rdd_sum / static_cast<double>(reports.size());
    return s;
}

} // namespace omnifx::metrics
