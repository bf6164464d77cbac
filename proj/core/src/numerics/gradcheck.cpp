// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "omnifx/error.hpp"

namespace omnifx::numerics {

namespace {

double evaluate(const ScalarGraphFn& fn, const std::vector<Tensor>& params) {
    Graph graph;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) {
        leaves.push_back(graph.constant(p));
    }
    Var out = fn(graph, leaves);
    if (out.value().size() != 1) {
        throw ShapeError("finite_diff_check: function must return a scalar, got " + to_string(out.shape()));
    }
    double v = out.value()[0];
    if (!std::isfinite(v)) {
        throw Error("finite_diff_check: forward value is not finite");
    }
    return v;
}

} // namespace

GradCheckReport finite_diff_check(const ScalarGraphFn& fn, std::vector<Tensor> params, double step) {
    if (!(step > 0.0)) {
        throw Error("finite_diff_check: step must be positive");
    }

    std::vector<Tensor> analytic;
    {
        Graph graph;
        std::vector<Var> leaves;
        for (const auto& p : params) {
            leaves.push_back(graph.variable(p));
        }
        Var out = fn(graph, leaves);
        if (out.value().size() != 1) {
            throw ShapeError("finite_diff_check: function must return a scalar, got " + to_string(out.shape()));
        }
        if (!std::isfinite(out.value()[0])) {
            throw Error("finite_diff_check: forward value is not finite");
        }
        graph.backward(out);
        for (const Var& leaf : leaves) {
            analytic.push_back(leaf.grad());
        }
    }

    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            double saved = params[p][i];
            params[p][i] = saved + step;
            double plus = evaluate(fn, params);
            params[p][i] = saved - step;
            double minus = evaluate(fn, params);
            params[p][i] = saved;

            double numeric = (plus - minus) / (2.0 * step);
            double err = std::abs(analytic[p][i] - numeric) / std::max(1.0, std::abs(numeric));
            if (err > report.max_error || (p == 0 && i == 0)) {
                report = {err, p, i, analytic[p][i], numeric};
            }
        }
    }
    return report;
}

} // namespace omnifx::numerics
