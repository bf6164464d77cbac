// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/diagnostics.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>

#include "omnifx/lora_moe.hpp"
#include "omnifx/model.hpp"
#include "omnifx/numerics/gradcheck.hpp"

namespace omnifx::diagnostics {

namespace {

namespace nx = numerics;
using nx::Graph;
using nx::Tensor;
using nx::Var;

Tensor gaussian(nx::Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> n(0.0, scale);
    for (auto& v : t.values()) {
        v = n(rng);
    }
    return t;
}

/// Scalar reduction with fixed random weights per output entry.
Var weighted_sum(Var y) {
    Rng rng(1234);
    return nx::sum(nx::mul_const(y, gaussian(y.shape(), rng)));
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct Case {
    std::string name;
    std::function<std::vector<Tensor>(Rng&)> inputs;
    nx::ScalarGraphFn fn;
};

Case unary(std::string name, std::function<Var(Var)> op, double scale = 1.0) {
    return {std::move(name),
            [scale](Rng& r) {
                std::size_t a = between(r, 1, 4);
                std::size_t b = between(r, 1, 5);
                return std::vector{gaussian({a, b}, r, scale)};
            },
            [op](Graph&, std::span<const Var> p) { return weighted_sum(op(p[0])); }};
}

Case binary(std::string name, std::function<Var(Var, Var)> op) {
    return {std::move(name),
            [](Rng& r) {
                std::size_t a = between(r, 1, 4);
                std::size_t b = between(r, 1, 4);
                return std::vector{gaussian({a, b}, r), gaussian({a, b}, r)};
            },
            [op](Graph&, std::span<const Var> p) { return weighted_sum(op(p[0], p[1])); }};
}

std::vector<Case> primitive_cases() {
    std::vector<Case> cases;
    cases.push_back({"matmul",
                     [](Rng& r) {
                         std::size_t m = between(r, 1, 4), k = between(r, 1, 4), n = between(r, 1, 4);
                         return std::vector{gaussian({m, k}, r), gaussian({k, n}, r)};
                     },
                     [](Graph&, std::span<const Var> p) { return weighted_sum(nx::matmul(p[0], p[1])); }});
    cases.push_back(unary("transpose", [](Var x) { return nx::transpose(x); }));
    cases.push_back(binary("add", [](Var a, Var b) { return nx::add(a, b); }));
    cases.push_back(binary("sub", [](Var a, Var b) { return nx::sub(a, b); }));
    cases.push_back(binary("mul", [](Var a, Var b) { return nx::mul(a, b); }));
    cases.push_back({"add_row",
                     [](Rng& r) {
                         std::size_t a = between(r, 1, 4), b = between(r, 1, 4);
                         return std::vector{gaussian({a, b}, r), gaussian({1, b}, r)};
                     },
                     [](Graph&, std::span<const Var> p) { return weighted_sum(nx::add_row(p[0], p[1])); }});
    cases.push_back(unary("scale", [](Var x) { return nx::scale(x, -1.7); }));
    cases.push_back(unary("mul_const", [](Var x) {
        Rng r(9);
        return nx::mul_const(x, gaussian(x.shape(), r));
    }));
    cases.push_back({"row_scale",
                     [](Rng& r) {
                         std::size_t a = between(r, 1, 4), b = between(r, 1, 4);
                         return std::vector{gaussian({a, b}, r), gaussian({a, 1}, r)};
                     },
                     [](Graph&, std::span<const Var> p) { return weighted_sum(nx::row_scale(p[0], p[1])); }});
    cases.push_back(unary("gelu", [](Var x) { return nx::gelu(x); }, 2.0));
    cases.push_back({"masked_softmax_rows",
                     [](Rng& r) {
                         std::size_t l = between(r, 1, 5);
                         return std::vector{gaussian({l, l}, r, 2.0)};
                     },
                     [](Graph&, std::span<const Var> p) {
                         std::size_t l = p[0].value().rows();
                         nx::AttentionMask m(l, true);
                         for (std::size_t i = 0; l > 1 && i < l; ++i) {
                             m.set(i, (i + 1) % l, false);
                         }
                         return weighted_sum(nx::masked_softmax_rows(p[0], m));
                     }});
    cases.push_back(unary("softmax_rows", [](Var x) { return nx::softmax_rows(x); }, 2.0));
    cases.push_back({"layer_norm_rows",
                     [](Rng& r) {
                         std::size_t a = between(r, 1, 4), b = between(r, 2, 6);
                         return std::vector{gaussian({a, b}, r)};
                     },
                     [](Graph&, std::span<const Var> p) { return weighted_sum(nx::layer_norm_rows(p[0])); }});
    cases.push_back({"slice_rows", [](Rng& r) { return std::vector{gaussian({between(r, 3, 5), 3}, r)}; },
                     [](Graph&, std::span<const Var> p) { return weighted_sum(nx::slice_rows(p[0], 1, 3)); }});
    cases.push_back({"slice_cols", [](Rng& r) { return std::vector{gaussian({2, between(r, 3, 5)}, r)}; },
                     [](Graph&, std::span<const Var> p) { return weighted_sum(nx::slice_cols(p[0], 1, 3)); }});
    cases.push_back({"concat_rows",
                     [](Rng& r) {
                         std::size_t c = between(r, 1, 4);
                         std::size_t a = between(r, 1, 3), b = between(r, 1, 3);
                         return std::vector{gaussian({a, c}, r), gaussian({b, c}, r)};
                     },
                     [](Graph&, std::span<const Var> p) { return weighted_sum(nx::concat_rows(p)); }});
    cases.push_back({"concat_cols",
                     [](Rng& r) {
                         std::size_t rows = between(r, 1, 4);
                         std::size_t a = between(r, 1, 3), b = between(r, 1, 3);
                         return std::vector{gaussian({rows, a}, r), gaussian({rows, b}, r)};
                     },
                     [](Graph&, std::span<const Var> p) { return weighted_sum(nx::concat_cols(p)); }});
    cases.push_back({"gather_rows", [](Rng& r) { return std::vector{gaussian({4, between(r, 1, 3)}, r)}; },
                     [](Graph&, std::span<const Var> p) {
                         const std::size_t idx[] = {2, 0, 2, 3};
                         return weighted_sum(nx::gather_rows(p[0], idx));
                     }});
    cases.push_back(unary("sum", [](Var x) { return nx::scale(nx::sum(x), 1.3); }));
    cases.push_back(unary("mean", [](Var x) { return nx::scale(nx::mean(x), 1.3); }));
    cases.push_back(unary("mean_rows", [](Var x) { return nx::mean_rows(x); }));
    cases.push_back(binary("mse", [](Var a, Var b) { return nx::mse(a, b); }));
    return cases;
}

Case moe_case() {
    const std::size_t d = 3, n = 3, r = 2;
    return {"lora_moe",
            [=](Rng& rng) {
                std::vector<Tensor> p{gaussian({4, d}, rng), gaussian({d, d}, rng), gaussian({1, d}, rng),
                                      gaussian({d, n}, rng), gaussian({4, d}, rng)};
                for (std::size_t i = 0; i < n; ++i) {
                    p.push_back(gaussian({d, r}, rng));
                    p.push_back(gaussian({r, d}, rng));
                }
                return p;
            },
            [=](Graph&, std::span<const Var> p) {
                moe::MoELayerVars layer{p[1], p[2], {}, p[3]};
                for (std::size_t i = 0; i < n; ++i) {
                    layer.experts.push_back({p[5 + 2 * i], p[6 + 2 * i], 2.0});
                }
                auto out = moe::moe_forward(p[0], layer, 2, moe::RoutingMode::TopK);
                return nx::add(nx::mse(out.y, p[4]), nx::scale(out.aux, 0.01));
            }};
}

GradientResult denoiser_check(std::size_t trials, Rng& rng, double step) {
    model::ModelConfig c;
    c.frames = 1;
    c.height = 2;
    c.width = 2;
    c.patch = 1;
    c.dim = 8;
    c.heads = 2;
    c.blocks = 1;
    c.ffn_hidden = 8;
    c.text_len = 2;
    c.attn_lora_rank = 2;
    c.moe.rank = 2;
    GradientResult result{"denoiser", trials, 0.0};
    for (std::size_t trial = 0; trial < trials; ++trial) {
        auto params = model::init_denoiser(c, rng);
        for (auto& [name, t] : params.tensors) {
            if (name.ends_with(".b")) {
                t = gaussian(t.shape(), rng, 0.3);
            }
        }
        Video x(1, 2, 2);
        Video ref(1, 2, 2);
        fill_normal(x.values(), rng);
        fill_normal(ref.values(), rng);
        Mask mask(2, 2);
        mask.set(0, trial % 2, true);
        std::vector<conditioning::ConditionPair> conds{{trial % c.vocab, mask}};
        std::size_t t = std::uniform_int_distribution<std::size_t>(1, c.timesteps)(rng);

        std::vector<std::string> names;
        std::vector<Tensor> values;
        for (const auto& [name, tensor] : params.tensors) {
            names.push_back(name);
            values.push_back(tensor);
        }
        auto fn = [&](Graph& g, std::span<const Var> p) {
            std::map<std::string, Var> vars;
            for (std::size_t i = 0; i < names.size(); ++i) {
                vars.emplace(names[i], p[i]);
            }
            auto out = model::denoise(g, model::BoundParams(std::move(vars)), c, x, t, ref, conds,
                                      {moe::RoutingMode::Full});
            return nx::add(weighted_sum(out.v_tokens), nx::scale(out.aux, 0.01));
        };
        result.max_error = std::max(result.max_error, nx::finite_diff_check(fn, values, step).max_error);
    }
    return result;
}

} // namespace

std::vector<GradientResult> run_gradient_suite(std::size_t trials, std::uint64_t seed, double step) {
    Rng rng(seed);
    std::vector<GradientResult> out;
    auto cases = primitive_cases();
    cases.push_back(moe_case());
    for (const auto& c : cases) {
        GradientResult r{c.name, trials, 0.0};
        for (std::size_t i = 0; i < trials; ++i) {
            r.max_error = std::max(r.max_error, nx::finite_diff_check(c.fn, c.inputs(rng), step).max_error);
        }
        out.push_back(r);
    }
    out.push_back(denoiser_check(std::max<std::size_t>(1, trials / 5), rng, step));
    return out;
}

} // namespace omnifx::diagnostics
