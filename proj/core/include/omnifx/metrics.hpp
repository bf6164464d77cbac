// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omnifx/conditioning.hpp"
#include "omnifx/video.hpp"

namespace omnifx::metrics {

/// Dense displacement field: frame_a(y, x) ~ frame_b(y + v, x + u).
struct FlowField {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> u;
    std::vector<double> v;

    double magnitude(std::size_t y, std::size_t x) const;
    double mean_u() const;
    double mean_v() const;
};

struct FlowConfig {
    std::size_t levels = 3;
    std::size_t block = 4;
    int search = 3;
};

/// Coarse-to-fine block matching on single-channel H×W frames.
FlowField estimate_flow(std::span<const double> frame_a, std::span<const double> frame_b, std::size_t height,
                        std::size_t width, const FlowConfig& config = {});
/// Flow between luminance of frames `fa` and `fb` of one video.
FlowField estimate_flow(const Video& video, std::size_t fa, std::size_t fb, const FlowConfig& config = {});

/// Mean in-mask flow magnitude averaged over consecutive frame pairs.
double rdd(const Video& video, const Mask& mask, const FlowConfig& config = {});
/// Mean flow magnitude over every pixel and consecutive frame pair.
double dynamic_degree(const Video& video, const FlowConfig& config = {});

struct EcrThresholds {
    double inner = 0.5;
    double outer = 0.1;
    double keep_fraction = 0.8;

    /// Inner below 0.5, outer below 0.1, 80% kept share.
    static EcrThresholds standard() { return {}; }
};

struct EcrResult {
    double inner_diff = 0.0;
    double outer_diff = 0.0;
    bool controllable = false;
};

/// First/last-frame change: mean square of the largest in-mask diffs and of
/// the smallest out-of-mask diffs (ties broken by pixel index).
EcrResult ecr_single(const Video& video, const Mask& mask, const EcrThresholds& thresholds = {});

/// Union of every condition mask.
Mask condition_union(std::span<const conditioning::ConditionPair> conditions, std::size_t height, std::size_t width);

struct MetricReport {
    std::string id;
    double rdd = 0.0;
    double inner_diff = 0.0;
    double outer_diff = 0.0;
    bool controllable = false;
    std::optional<bool> eor; // empty when the judge could not be consulted
    double dynamic_degree = 0.0;
};

struct RateSummary {
    std::size_t samples = 0;
    std::size_t evaluable = 0;
    std::size_t detected = 0;
    std::size_t controllable = 0;
    double eor_rate = 0.0; // detected / evaluable
    double ecr_rate = 0.0; // controllable among detected / detected
    double mean_rdd = 0.0;
};

RateSummary summarize(std::span<const MetricReport> reports);

} // namespace omnifx::metrics
