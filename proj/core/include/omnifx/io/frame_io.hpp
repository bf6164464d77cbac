// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "omnifx/video.hpp"

namespace omnifx::io {

/// One decoded graymap with samples scaled to [0, 1].
struct Graymap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;
};

/// Binary P5 graymap, maxval 255, values rounded to the nearest level.
std::string encode_pgm(std::span<const double> pixels, std::size_t height, std::size_t width);
/// Accepts any maxval in [1, 65535]; errors name the byte offset.
Graymap decode_pgm(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

/// `<dir>/<stem>_<index>.pgm` with the index zero-padded to 3 digits.
std::string frame_path(const std::string& dir, const std::string& stem, std::size_t index);

/// Writes one file per frame and returns the paths. Single-channel only.
std::vector<std::string> save_video(const Video& video, const std::string& dir, const std::string& stem);
Video load_video(std::span<const std::string> paths);

void save_mask(const Mask& mask, const std::string& path);
/// Any nonzero sample is "inside".
Mask load_mask(const std::string& path);

} // namespace omnifx::io
