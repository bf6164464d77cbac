// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "omnifx/numerics/autograd.hpp"
#include "omnifx/video.hpp"

namespace omnifx::testing {

inline numerics::Tensor random_tensor(numerics::Shape shape, Rng& rng, double scale = 1.0) {
    numerics::Tensor t(std::move(shape));
    std::normal_distribution<double> n(0.0, scale);
    for (auto& v : t.values()) {
        v = n(rng);
    }
    return t;
}

/// Scalar reduction with fixed random weights per output entry.
inline numerics::Var weighted_sum(numerics::Var y, std::uint64_t seed = 1234) {
    Rng rng(seed);
    return numerics::sum(numerics::mul_const(y, random_tensor(y.shape(), rng)));
}

inline Video random_video(std::size_t f, std::size_t h, std::size_t w, Rng& rng, std::size_t c = 1) {
    Video v(f, h, w, c);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& x : v.values()) {
        x = u(rng);
    }
    return v;
}

} // namespace omnifx::testing
