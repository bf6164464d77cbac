// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "omnifx/error.hpp"
#include "omnifx/lora_moe.hpp"
#include "omnifx/numerics/gradcheck.hpp"
#include "support.hpp"

namespace moe = omnifx::moe;
namespace nx = omnifx::numerics;
using nx::Graph;
using nx::Tensor;
using nx::Var;
using omnifx::Rng;
using omnifx::testing::random_tensor;

namespace {

moe::MoELayerParams random_layer(std::size_t d_in, std::size_t d_out, std::size_t n, std::size_t k, std::size_t r,
                                 Rng& rng) {
    moe::MoELayerParams p;
    p.base_weight = random_tensor({d_in, d_out}, rng);
    p.base_bias = random_tensor({1, d_out}, rng);
    p.gate_weight = random_tensor({d_in, n}, rng);
    for (std::size_t i = 0; i < n; ++i) {
        p.experts.push_back({random_tensor({d_in, r}, rng), random_tensor({r, d_out}, rng), 2.0});
    }
    p.top_k = k;
    return p;
}

std::size_t nonzeros(const Tensor& t, std::size_t row) {
    std::size_t count = 0;
    for (std::size_t c = 0; c < t.cols(); ++c) {
        count += t(row, c) != 0.0 ? 1 : 0;
    }
    return count;
}

} // namespace

TEST(ExpertForward, ZeroBGivesZero) {
    Rng rng(1);
    moe::LoraExpert e{random_tensor({3, 2}, rng), Tensor({2, 4}, 0.0), 4.0};
    Tensor y = moe::expert_forward(random_tensor({5, 3}, rng), e);
    for (double v : y.values()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(ExpertForward, AlphaEqualRankIsUnitScale) {
    Rng rng(2);
    moe::LoraExpert e{random_tensor({3, 2}, rng), random_tensor({2, 4}, rng), 2.0};
    Tensor x = random_tensor({5, 3}, rng);
    EXPECT_LE(nx::max_abs_diff(moe::expert_forward(x, e), nx::matmul(nx::matmul(x, e.a), e.b)), 1e-14);
}

TEST(ExpertForward, HandComputedTwelve) {
    moe::LoraExpert e{Tensor::matrix({{1}, {1}}), Tensor::matrix({{3}}), 2.0};
    Tensor y = moe::expert_forward(Tensor::row({1, 1}), e);
    EXPECT_DOUBLE_EQ(y[0], 12.0);
}

TEST(ExpertForward, DimMismatchFails) {
    moe::LoraExpert e{Tensor({3, 2}), Tensor({2, 4}), 1.0};
    EXPECT_THROW(moe::expert_forward(Tensor({1, 2}), e), omnifx::ShapeError);
}

TEST(GateRoute, SingleExpertWeightIsOne) {
    Rng rng(3);
    Tensor x = random_tensor({4, 3}, rng);
    Tensor w = random_tensor({3, 1}, rng);
    for (auto mode : {moe::RoutingMode::TopK, moe::RoutingMode::Full}) {
        Tensor g = moe::gate_route(x, w, 1, mode);
        for (double v : g.values()) {
            EXPECT_EQ(v, 1.0);
        }
    }
}

TEST(GateRoute, TopOneKeepsUnrenormalizedSoftmax) {
    // identity input picks out the logits [2, 1, 0] directly
    Tensor g = moe::gate_route(Tensor::row({1}), Tensor::matrix({{2, 1, 0}}), 1, moe::RoutingMode::TopK);
    double expected = std::exp(2.0) / (std::exp(2.0) + std::exp(1.0) + 1.0);
    EXPECT_NEAR(g[0], expected, 1e-15);
    EXPECT_NEAR(g[0], 0.6652, 1e-4);
    EXPECT_EQ(g[1], 0.0);
    EXPECT_EQ(g[2], 0.0);
}

TEST(GateRoute, EqualLogitsTieBreakToLowestIndices) {
    Tensor g = moe::gate_route(Tensor::row({1}), Tensor({1, 4}, 0.0), 2, moe::RoutingMode::TopK);
    EXPECT_DOUBLE_EQ(g[0], 0.25);
    EXPECT_DOUBLE_EQ(g[1], 0.25);
    EXPECT_EQ(g[2], 0.0);
    EXPECT_EQ(g[3], 0.0);
}

TEST(GateRoute, KAboveExpertCountFails) {
    EXPECT_THROW(moe::gate_route(Tensor::row({1}), Tensor({1, 2}), 3, moe::RoutingMode::TopK), omnifx::Error);
}

TEST(GateRoute, TrainingModeHasExactlyKNonzerosOverManyTokens) {
    Rng rng(4);
    Tensor x = random_tensor({1000, 6}, rng);
    Tensor w = random_tensor({6, 8}, rng);
    for (std::size_t k : {1u, 2u, 5u}) {
        Tensor g = moe::gate_route(x, w, k, moe::RoutingMode::TopK);
        for (std::size_t t = 0; t < 1000; ++t) {
            ASSERT_EQ(nonzeros(g, t), k);
        }
    }
}

TEST(GateRoute, InferenceModeIsFullSoftmax) {
    Rng rng(5);
    Tensor x = random_tensor({1000, 6}, rng);
    Tensor w = random_tensor({6, 8}, rng);
    Tensor g = moe::gate_route(x, w, 2, moe::RoutingMode::Full);
    for (std::size_t t = 0; t < 1000; ++t) {
        ASSERT_EQ(nonzeros(g, t), 8u);
        double total = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
            total += g(t, i);
        }
        ASSERT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(MoEForward, ZeroExpertBEqualsBase) {
    Rng rng(6);
    auto p = random_layer(4, 3, 4, 2, 2, rng);
    for (auto& e : p.experts) {
        e.b.fill(0.0);
    }
    Tensor x = random_tensor({7, 4}, rng);
    Tensor base = nx::matmul(x, p.base_weight);
    for (std::size_t t = 0; t < 7; ++t) {
        for (std::size_t c = 0; c < 3; ++c) {
            base(t, c) += p.base_bias(0, c);
        }
    }
    EXPECT_EQ(moe::moe_forward(x, p).y, base);
}

TEST(MoEForward, SingleExpertIsPlainLoraLayer) {
    Rng rng(7);
    auto p = random_layer(4, 3, 1, 1, 2, rng);
    Tensor x = random_tensor({7, 4}, rng);
    Tensor expected = nx::matmul(x, p.base_weight);
    Tensor lora = moe::expert_forward(x, p.experts[0]);
    for (std::size_t t = 0; t < 7; ++t) {
        for (std::size_t c = 0; c < 3; ++c) {
            expected(t, c) = (expected(t, c) + p.base_bias(0, c)) + lora(t, c);
        }
    }
    for (auto mode : {moe::RoutingMode::TopK, moe::RoutingMode::Full}) {
        p.mode = mode;
        EXPECT_EQ(moe::moe_forward(x, p).y, expected);
    }
}

TEST(MoEForward, UnselectedExpertContributesNothing) {
    Rng rng(8);
    auto p = random_layer(2, 2, 2, 1, 1, rng);
    p.gate_weight = Tensor::matrix({{5, 0}, {0, 0}}); // token [1, 0] routes to expert 0
    Tensor x = Tensor::row({1, 0});
    Tensor g = moe::gate_route(x, p.gate_weight, 1, moe::RoutingMode::TopK);
    ASSERT_EQ(g[1], 0.0);
    Tensor e0 = moe::expert_forward(x, p.experts[0]);
    Tensor base = nx::matmul(x, p.base_weight);
    Tensor y = moe::moe_forward(x, p).y;
    for (std::size_t c = 0; c < 2; ++c) {
        EXPECT_NEAR(y(0, c), base(0, c) + p.base_bias(0, c) + g[0] * e0(0, c), 1e-14);
    }
    p.experts[1].b.fill(1e6);
    EXPECT_EQ(moe::moe_forward(x, p).y, y);
}

TEST(AuxLoss, UniformRouterIsExactlyOne) {
    for (std::size_t n : {1u, 2u, 4u, 8u}) {
        Tensor probs({16, n}, 1.0 / static_cast<double>(n));
        auto stats = moe::routing_stats(probs);
        EXPECT_NEAR(stats.aux, 1.0, 1e-12) << n;
    }
}

TEST(AuxLoss, SkewedRouterIsOnePointEight) {
    Tensor probs = Tensor::matrix({{0.9, 0.1}, {0.9, 0.1}, {0.9, 0.1}});
    auto stats = moe::routing_stats(probs);
    EXPECT_EQ(stats.fraction, (std::vector<double>{1.0, 0.0}));
    EXPECT_NEAR(stats.aux, 1.8, 1e-12);
    EXPECT_GT(stats.aux, 1.0);
}

TEST(AuxLoss, EvenSplitIsOne) {
    Tensor probs = Tensor::matrix({{0.7, 0.3}, {0.3, 0.7}});
    auto stats = moe::routing_stats(probs);
    EXPECT_EQ(stats.fraction, (std::vector<double>{0.5, 0.5}));
    EXPECT_NEAR(stats.aux, 1.0, 1e-12);
}

TEST(AuxLoss, ArgmaxTiesGoToLowestIndex) {
    auto stats = moe::routing_stats(Tensor::matrix({{0.5, 0.5}}));
    EXPECT_EQ(stats.fraction, (std::vector<double>{1.0, 0.0}));
}

TEST(RoutingStats, FractionsAndProbabilitiesSumToOne) {
    Rng rng(9);
    Tensor x = random_tensor({50, 4}, rng);
    auto out = moe::moe_forward(x, random_layer(4, 4, 6, 2, 2, rng));
    double f = 0.0, p = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        f += out.stats.fraction[i];
        p += out.stats.mean_prob[i];
    }
    EXPECT_NEAR(f, 1.0, 1e-12);
    EXPECT_NEAR(p, 1.0, 1e-12);
    EXPECT_GE(out.stats.aux, 0.0);
    EXPECT_EQ(out.stats.tokens, 50u);
}

TEST(MoEGradient, MsePlusAuxMatchesFiniteDifferences) {
    Rng rng(10);
    const std::size_t d = 3, n = 3, r = 2;
    Tensor target = random_tensor({5, d}, rng);
    std::vector<Tensor> params{random_tensor({5, d}, rng), random_tensor({d, d}, rng), random_tensor({1, d}, rng),
                               random_tensor({d, n}, rng)};
    for (std::size_t i = 0; i < n; ++i) {
        params.push_back(random_tensor({d, r}, rng));
        params.push_back(random_tensor({r, d}, rng));
    }
    for (auto mode : {moe::RoutingMode::TopK, moe::RoutingMode::Full}) {
        auto fn = [&](Graph& g, std::span<const Var> p) {
            moe::MoELayerVars layer{p[1], p[2], {}, p[3]};
            for (std::size_t i = 0; i < n; ++i) {
                layer.experts.push_back({p[4 + 2 * i], p[5 + 2 * i], 2.0});
            }
            auto out = moe::moe_forward(p[0], layer, 2, mode);
            return nx::add(nx::mse(out.y, g.constant(target)), nx::scale(out.aux, 0.01));
        };
        auto report = nx::finite_diff_check(fn, params);
        EXPECT_LE(report.max_error, 1e-4);
    }
}

TEST(MoEConfig, NamedPresets) {
    auto toy = moe::MoEConfig::toy();
    EXPECT_EQ(toy.experts, 4u);
    EXPECT_EQ(toy.top_k, 1u);
    EXPECT_EQ(toy.rank, 4u);
    auto large = moe::MoEConfig::large();
    EXPECT_EQ(large.experts, 8u);
    EXPECT_EQ(large.top_k, 2u);
    EXPECT_EQ(large.rank, 128u);
    auto ablation = moe::MoEConfig::four_experts_top1();
    EXPECT_EQ(ablation.experts, 4u);
    EXPECT_EQ(ablation.top_k, 1u);
    moe::MoEConfig bad;
    bad.top_k = 5;
    EXPECT_THROW(bad.validate(), omnifx::Error);
}

TEST(InitMoELayer, FreshLayerIsBaseLinearMap) {
    Rng rng(11);
    auto p = moe::init_moe_layer(4, 3, moe::MoEConfig::toy(), rng);
    Tensor x = random_tensor({6, 4}, rng);
    Tensor base = nx::matmul(x, p.base_weight);
    for (std::size_t t = 0; t < 6; ++t) {
        for (std::size_t c = 0; c < 3; ++c) {
            base(t, c) += p.base_bias(0, c);
        }
    }
    EXPECT_EQ(moe::moe_forward(x, p).y, base);
}
