// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace omnifx {

/// Dense F×H×W×C video of unit-interval intensities (values may leave
/// [0, 1] transiently inside the diffusion process).
class Video {
public:
    Video() = default;
    Video(std::size_t frames, std::size_t height, std::size_t width, std::size_t channels = 1, double fill = 0.0);

    std::size_t frames() const { return frames_; }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    std::size_t frame_size() const { return height_ * width_ * channels_; }

    double& at(std::size_t f, std::size_t y, std::size_t x, std::size_t c = 0) {
        return data_[((f * height_ + y) * width_ + x) * channels_ + c];
    }
    double at(std::size_t f, std::size_t y, std::size_t x, std::size_t c = 0) const {
        return data_[((f * height_ + y) * width_ + x) * channels_ + c];
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    /// Single-frame video holding frame `f`.
    Video frame(std::size_t f) const;
    /// Frame `f` repeated `count` times.
    Video repeat_frame(std::size_t f, std::size_t count) const;
    /// Mean over channels of frame `f`, H×W row-major.
    std::vector<double> luminance(std::size_t f) const;

    bool same_extents(const Video& other) const;
    void clamp_unit();

    friend bool operator==(const Video&, const Video&) = default;

private:
    std::size_t frames_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

/// H×W binary spatial grid.
class Mask {
public:
    Mask() = default;
    Mask(std::size_t height, std::size_t width, bool fill = false);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    bool at(std::size_t y, std::size_t x) const { return cells_[y * width_ + x] != 0; }
    void set(std::size_t y, std::size_t x, bool on) { cells_[y * width_ + x] = on ? 1 : 0; }

    /// Sets the half-open rectangle [y0, y1) × [x0, x1), clipped to the grid.
    void fill_rect(long y0, long x0, long y1, long x1, bool on = true);

    std::size_t count() const;
    bool empty() const { return count() == 0; }
    bool full() const { return count() == cells_.size(); }
    std::span<const std::uint8_t> cells() const { return cells_; }

    Mask united(const Mask& other) const;
    Mask inverted() const;

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> cells_;
};

using Rng = std::mt19937_64;

/// Fills `out` with independent standard normal draws.
void fill_normal(std::span<double> out, Rng& rng);

} // namespace omnifx
