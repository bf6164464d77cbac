// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "omnifx/numerics/autograd.hpp"

namespace omnifx::numerics {

/// Builds a scalar-valued graph from parameter leaves.
using ScalarGraphFn = std::function<Var(Graph&, std::span<const Var>)>;

struct GradCheckReport {
    double max_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Compares reverse-mode gradients with central differences.
///
/// The error for one entry is |analytic - central| / max(1, |central|); the
/// report carries the maximum over every entry of every parameter. Throws if
/// any forward evaluation is non-finite or `step` is not positive.
GradCheckReport finite_diff_check(const ScalarGraphFn& fn, std::vector<Tensor> params, double step = 1e-5);

} // namespace omnifx::numerics
