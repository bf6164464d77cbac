// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace omnifx::diagnostics {

struct GradientResult {
    std::string name;
    std::size_t trials = 0;
    double max_error = 0.0;
};

/// Finite-difference checks of every differentiable primitive, the LoRA-MoE
/// layer, and the whole denoiser at d=8, F=1, H=W=2, p=1 with one condition.
std::vector<GradientResult> run_gradient_suite(std::size_t trials = 10, std::uint64_t seed = 0, double step = 1e-5);

} // namespace omnifx::diagnostics
