// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/video.hpp"

#include <algorithm>

#include "omnifx/error.hpp"

namespace omnifx {

Video::Video(std::size_t frames, std::size_t height, std::size_t width, std::size_t channels, double fill)
    : frames_(frames), height_(height), width_(width), channels_(channels),
      data_(frames * height * width * channels, fill) {
    if (frames == 0 || height == 0 || width == 0 || channels == 0) {
        throw ShapeError("video extents must be positive");
    }
}

Video Video::frame(std::size_t f) const {
    return repeat_frame(f, 1);
}

Video Video::repeat_frame(std::size_t f, std::size_t count) const {
    if (f >= frames_) {
        throw ShapeError("frame index " + std::to_string(f) + " out of range");
    }
    Video out(count, height_, width_, channels_);
    auto src = data_.begin() + static_cast<std::ptrdiff_t>(f * frame_size());
    for (std::size_t k = 0; k < count; ++k) {
        std::copy_n(src, frame_size(), out.data_.begin() + static_cast<std::ptrdiff_t>(k * frame_size()));
    }
    return out;
}

std::vector<double> Video::luminance(std::size_t f) const {
    std::vector<double> out(height_ * width_);
    for (std::size_t y = 0; y < height_; ++y) {
        for (std::size_t x = 0; x < width_; ++x) {
            double s = 0.0;
            for (std::size_t c = 0; c < channels_; ++c) {
                s += at(f, y, x, c);
            }
            out[y * width_ + x] = s / static_cast<double>(channels_);
        }
    }
    return out;
}

bool Video::same_extents(const Video& other) const {
    return frames_ == other.frames_ && height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
}

void Video::clamp_unit() {
    for (auto& v : data_) {
        v = std::clamp(v, 0.0, 1.0);
    }
}

Mask::Mask(std::size_t height, std::size_t width, bool fill)
    : height_(height), width_(width), cells_(height * width, fill ? 1 : 0) {}

void Mask::fill_rect(long y0, long x0, long y1, long x1, bool on) {
    long h = static_cast<long>(height_);
    long w = static_cast<long>(width_);
    for (long y = std::max(0L, y0); y < std::min(h, y1); ++y) {
        for (long x = std::max(0L, x0); x < std::min(w, x1); ++x) {
            set(static_cast<std::size_t>(y), static_cast<std::size_t>(x), on);
        }
    }
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

Mask Mask::united(const Mask& other) const {
    if (height_ != other.height_ || width_ != other.width_) {
        throw ShapeError("mask extents differ");
    }
    Mask out = *this;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        out.cells_[i] = static_cast<std::uint8_t>(cells_[i] | other.cells_[i]);
    }
    return out;
}

Mask Mask::inverted() const {
    Mask out = *this;
    for (auto& c : out.cells_) {
        c = static_cast<std::uint8_t>(c ^ 1);
    }
    return out;
}

void fill_normal(std::span<double> out, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : out) {
        v = normal(rng);
    }
}

} // namespace omnifx
