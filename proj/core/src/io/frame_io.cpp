// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/io/frame_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "omnifx/error.hpp"

namespace omnifx::io {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos_;
            } else {
                return;
            }
        }
    }

    std::size_t number(const char* what) {
        skip_space_and_comments();
        std::size_t start = pos_;
        std::size_t value = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            if (value > 1'000'000'000) {
                fail(std::string(what) + " is too large", start);
            }
            ++pos_;
        }
        if (pos_ == start) {
            fail(std::string("expected ") + what, start);
        }
        return value;
    }

    [[noreturn]] void fail(const std::string& message, std::size_t offset) const {
        throw FormatError("malformed graymap: " + message + " at byte " + std::to_string(offset));
    }

    std::size_t pos_ = 0;
    std::string_view bytes_;
};

} // namespace

std::string encode_pgm(std::span<const double> pixels, std::size_t height, std::size_t width) {
    if (pixels.size() != height * width) {
        throw ShapeError("encode_pgm: " + std::to_string(pixels.size()) + " samples for a " + std::to_string(height) +
                         "x" + std::to_string(width) + " frame");
    }
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    std::size_t header = out.size();
    out.resize(header + pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        double v = std::clamp(pixels[i], 0.0, 1.0);
        out[header + i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    return out;
}

Graymap decode_pgm(std::string_view bytes) {
    HeaderReader in(bytes);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        in.fail("expected magic 'P5'", 0);
    }
    in.pos_ = 2;
    Graymap g;
    g.width = in.number("width");
    g.height = in.number("height");
    std::size_t maxval_at = in.pos_;
    std::size_t maxval = in.number("maxval");
    if (g.width == 0 || g.height == 0) {
        in.fail("zero extent", maxval_at);
    }
    if (maxval == 0 || maxval > 65535) {
        in.fail("maxval " + std::to_string(maxval) + " outside [1, 65535]", maxval_at);
    }
    if (in.pos_ >= bytes.size() ||
        !(bytes[in.pos_] == ' ' || bytes[in.pos_] == '\n' || bytes[in.pos_] == '\t' || bytes[in.pos_] == '\r')) {
        in.fail("expected a single whitespace byte before the raster", in.pos_);
    }
    ++in.pos_;
    std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    std::size_t expected = g.height * g.width * sample_bytes;
    if (bytes.size() - in.pos_ != expected) {
        in.fail("raster holds " + std::to_string(bytes.size() - in.pos_) + " bytes, expected " +
                    std::to_string(expected),
                in.pos_);
    }
    g.pixels.resize(g.height * g.width);
    auto raster = reinterpret_cast<const unsigned char*>(bytes.data() + in.pos_);
    for (std::size_t i = 0; i < g.pixels.size(); ++i) {
        std::size_t v = sample_bytes == 1 ? raster[i] : (static_cast<std::size_t>(raster[2 * i]) << 8) | raster[2 * i + 1];
        if (v > maxval) {
            in.fail("sample exceeds maxval", in.pos_ + i * sample_bytes);
        }
        g.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return g;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("failed writing '" + path + "'");
    }
}

std::string frame_path(const std::string& dir, const std::string& stem, std::size_t index) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_%03zu.pgm", index);
    return (std::filesystem::path(dir) / (stem + suffix)).string();
}

std::vector<std::string> save_video(const Video& video, const std::string& dir, const std::string& stem) {
    if (video.channels() != 1) {
        throw ShapeError("save_video: graymaps hold one channel, video has " + std::to_string(video.channels()));
    }
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (std::size_t f = 0; f < video.frames(); ++f) {
        auto path = frame_path(dir, stem, f);
        write_file(path, encode_pgm(video.luminance(f), video.height(), video.width()));
        paths.push_back(path);
    }
    return paths;
}

Video load_video(std::span<const std::string> paths) {
    if (paths.empty()) {
        throw Error("load_video: no frame files");
    }
    Video out;
    for (std::size_t f = 0; f < paths.size(); ++f) {
        Graymap g;
        try {
            g = decode_pgm(read_file(paths[f]));
        } catch (const FormatError& e) {
            throw FormatError(paths[f] + ": " + e.what());
        }
        if (f == 0) {
            out = Video(paths.size(), g.height, g.width, 1);
        } else if (g.height != out.height() || g.width != out.width()) {
            throw ShapeError(paths[f] + ": frame extents differ from the first frame");
        }
        for (std::size_t i = 0; i < g.pixels.size(); ++i) {
            out.at(f, i / g.width, i % g.width) = g.pixels[i];
        }
    }
    return out;
}

void save_mask(const Mask& mask, const std::string& path) {
    std::vector<double> pixels(mask.cells().begin(), mask.cells().end());
    write_file(path, encode_pgm(pixels, mask.height(), mask.width()));
}

Mask load_mask(const std::string& path) {
    Graymap g;
    try {
        g = decode_pgm(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
    Mask m(g.height, g.width);
    for (std::size_t i = 0; i < g.pixels.size(); ++i) {
        m.set(i / g.width, i % g.width, g.pixels[i] > 0.0);
    }
    return m;
}

} // namespace omnifx::io
