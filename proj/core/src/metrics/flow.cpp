// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "omnifx/error.hpp"
#include "omnifx/metrics.hpp"

namespace omnifx::metrics {

namespace {

struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

Image downsample(const Image& in) {
    Image out{in.height / 2, in.width / 2, {}};
    out.pixels.resize(out.height * out.width);
    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            out.pixels[y * out.width + x] = 0.25 * (in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) +
                                                    in.at(2 * y + 1, 2 * x) + in.at(2 * y + 1, 2 * x + 1));
        }
    }
    return out;
}

double bilinear(const std::vector<double>& field, std::size_t h, std::size_t w, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    auto y0 = static_cast<std::size_t>(std::floor(y));
    auto x0 = static_cast<std::size_t>(std::floor(x));
    std::size_t y1 = std::min(y0 + 1, h - 1);
    std::size_t x1 = std::min(x0 + 1, w - 1);
    double fy = y - static_cast<double>(y0);
    double fx = x - static_cast<double>(x0);
    double top = (1.0 - fx) * field[y0 * w + x0] + fx * field[y0 * w + x1];
    double bottom = (1.0 - fx) * field[y1 * w + x0] + fx * field[y1 * w + x1];
    return (1.0 - fy) * top + fy * bottom;
}

FlowField upsample(const FlowField& coarse, std::size_t height, std::size_t width) {
    FlowField out{height, width, std::vector<double>(height * width), std::vector<double>(height * width)};
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            double cy = (static_cast<double>(y) + 0.5) / 2.0 - 0.5;
            double cx = (static_cast<double>(x) + 0.5) / 2.0 - 0.5;
            out.u[y * width + x] = 2.0 * bilinear(coarse.u, coarse.height, coarse.width, cy, cx);
            out.v[y * width + x] = 2.0 * bilinear(coarse.v, coarse.height, coarse.width, cy, cx);
        }
    }
    return out;
}

void match_blocks(const Image& a, const Image& b, FlowField& flow, const FlowConfig& config) {
    const std::size_t B = config.block;
    const long H = static_cast<long>(a.height);
    const long W = static_cast<long>(a.width);
    for (std::size_t by = 0; by < a.height; by += B) {
        for (std::size_t bx = 0; bx < a.width; bx += B) {
            std::size_t ey = std::min(by + B, a.height);
            std::size_t ex = std::min(bx + B, a.width);
            std::size_t pixels = (ey - by) * (ex - bx);

            double gu = 0.0;
            double gv = 0.0;
            for (std::size_t y = by; y < ey; ++y) {
                for (std::size_t x = bx; x < ex; ++x) {
                    gu += flow.u[y * a.width + x];
                    gv += flow.v[y * a.width + x];
                }
            }
            long base_u = std::lround(gu / static_cast<double>(pixels));
            long base_v = std::lround(gv / static_cast<double>(pixels));

            double best_cost = std::numeric_limits<double>::infinity();
            long best_u = 0;
            long best_v = 0;
            auto consider = [&](long cu, long cv) {
                double sad = 0.0;
                std::size_t count = 0;
                for (std::size_t y = by; y < ey; ++y) {
                    long ty = static_cast<long>(y) + cv;
                    if (ty < 0 || ty >= H) {
                        continue;
                    }
                    for (std::size_t x = bx; x < ex; ++x) {
                        long tx = static_cast<long>(x) + cu;
                        if (tx < 0 || tx >= W) {
                            continue;
                        }
                        sad += std::abs(a.at(y, x) - b.at(static_cast<std::size_t>(ty), static_cast<std::size_t>(tx)));
                        ++count;
                    }
                }
                if (count == 0 || 2 * count < pixels) {
                    return;
                }
                double cost = sad / static_cast<double>(count);
                bool better = cost < best_cost - 1e-12;
                bool tie = !better && std::abs(cost - best_cost) <= 1e-12 &&
                           std::abs(cu) + std::abs(cv) < std::abs(best_u) + std::abs(best_v);
                if (better || tie) {
                    best_cost = cost;
                    best_u = cu;
                    best_v = cv;
                }
            };
            // Search around the propagated guess and around zero motion.
            for (int dy = -config.search; dy <= config.search; ++dy) {
                for (int dx = -config.search; dx <= config.search; ++dx) {
                    consider(base_u + dx, base_v + dy);
                    bool inside_guess_window = std::abs(dx - base_u) <= config.search &&
                                               std::abs(dy - base_v) <= config.search;
                    if (!inside_guess_window) {
                        consider(dx, dy);
                    }
                }
            }
            if (!std::isfinite(best_cost)) {
                best_u = 0;
                best_v = 0;
            }
            for (std::size_t y = by; y < ey; ++y) {
                for (std::size_t x = bx; x < ex; ++x) {
                    flow.u[y * a.width + x] = static_cast<double>(best_u);
                    flow.v[y * a.width + x] = static_cast<double>(best_v);
                }
            }
        }
    }
}

} // namespace

double FlowField::magnitude(std::size_t y, std::size_t x) const {
    std::size_t i = y * width + x;
    return std::hypot(u[i], v[i]);
}

double FlowField::mean_u() const {
    double s = 0.0;
    for (double x : u) {
        s += x;
    }
    return u.empty() ? 0.0 : s / static_cast<double>(u.size());
}

double FlowField::mean_v() const {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

FlowField estimate_flow(std::span<const double> frame_a, std::span<const double> frame_b, std::size_t height,
                        std::size_t width, const FlowConfig& config) {
    if (frame_a.size() != height * width || frame_b.size() != height * width) {
        throw ShapeError("estimate_flow: frames must both be " + std::to_string(height) + "x" +
                         std::to_string(width) + " (got " + std::to_string(frame_a.size()) + " and " +
                         std::to_string(frame_b.size()) + " pixels)");
    }
    if (height == 0 || width == 0 || config.block == 0 || config.levels == 0 || config.search < 0) {
        throw Error("estimate_flow: degenerate frame or configuration");
    }
    std::vector<Image> pa{{height, width, {frame_a.begin(), frame_a.end()}}};
    std::vector<Image> pb{{height, width, {frame_b.begin(), frame_b.end()}}};
    while (pa.size() < config.levels && pa.back().height / 2 >= config.block && pa.back().width / 2 >= config.block) {
        pa.push_back(downsample(pa.back()));
        pb.push_back(downsample(pb.back()));
    }

    const Image& top = pa.back();
    FlowField flow{top.height, top.width, std::vector<double>(top.pixels.size()),
                   std::vector<double>(top.pixels.size())};
    for (std::size_t level = pa.size(); level-- > 0;) {
        if (level + 1 < pa.size()) {
            flow = upsample(flow, pa[level].height, pa[level].width);
        }
        match_blocks(pa[level], pb[level], flow, config);
    }
    return flow;
}

FlowField estimate_flow(const Video& video, std::size_t fa, std::size_t fb, const FlowConfig& config) {
    return estimate_flow(video.luminance(fa), video.luminance(fb), video.height(), video.width(), config);
}

} // namespace omnifx::metrics
