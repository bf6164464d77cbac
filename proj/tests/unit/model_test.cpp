// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "omnifx/error.hpp"
#include "omnifx/model.hpp"
#include "omnifx/numerics/gradcheck.hpp"
#include "support.hpp"

namespace md = omnifx::model;
namespace nx = omnifx::numerics;
namespace cd = omnifx::conditioning;
using nx::Graph;
using nx::Tensor;
using nx::Var;
using omnifx::Mask;
using omnifx::Rng;
using omnifx::Video;
using omnifx::testing::random_tensor;
using omnifx::testing::random_video;

namespace {

md::ModelConfig tiny_config() {
    md::ModelConfig c;
    c.frames = 2;
    c.height = 4;
    c.width = 4;
    c.patch = 2;
    c.dim = 8;
    c.heads = 2;
    c.blocks = 1;
    c.ffn_hidden = 8;
    c.text_len = 2;
    c.attn_lora_rank = 2;
    c.moe.rank = 2;
    c.timesteps = 1000;
    return c;
}

bool is_lora_b(const std::string& name) {
    return name.ends_with(".b");
}

void randomize_b(md::DenoiserParams& p, Rng& rng, double scale = 0.3) {
    for (auto& [name, t] : p.tensors) {
        if (is_lora_b(name)) {
            t = random_tensor(t.shape(), rng, scale);
        }
    }
}

Mask square(std::size_t h, std::size_t w, long y0, long x0, long y1, long x1) {
    Mask m(h, w);
    m.fill_rect(y0, x0, y1, x1);
    return m;
}

} // namespace

TEST(Patchify, RoundTripIsBitExact) {
    Rng rng(1);
    Video v = random_video(3, 4, 6, rng, 2);
    EXPECT_EQ(md::unpatchify(md::patchify(v, 2), 3, 4, 6, 2, 2), v);
}

TEST(Patchify, UnitPatchTokensArePixels) {
    Video v(1, 2, 2);
    v.at(0, 0, 0) = 1;
    v.at(0, 0, 1) = 2;
    v.at(0, 1, 0) = 3;
    v.at(0, 1, 1) = 4;
    Tensor t = md::patchify(v, 1);
    EXPECT_EQ(t, Tensor::matrix({{1}, {2}, {3}, {4}}));
}

TEST(Patchify, ConstantVideoGivesIdenticalTokens) {
    Tensor t = md::patchify(Video(2, 4, 4, 1, 0.3), 2);
    ASSERT_EQ(t.rows(), 8u);
    for (std::size_t r = 1; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
            EXPECT_EQ(t(r, c), t(0, c));
        }
    }
}

TEST(Patchify, FeatureOrderIsRowColumnChannel) {
    Video v(1, 2, 2, 2);
    for (std::size_t y = 0; y < 2; ++y) {
        for (std::size_t x = 0; x < 2; ++x) {
            for (std::size_t c = 0; c < 2; ++c) {
                v.at(0, y, x, c) = static_cast<double>(y * 4 + x * 2 + c);
            }
        }
    }
    EXPECT_EQ(md::patchify(v, 2), Tensor::row({0, 1, 2, 3, 4, 5, 6, 7}));
}

TEST(Patchify, IndivisibleExtentsFail) {
    EXPECT_THROW(md::patchify(Video(1, 5, 4), 2), omnifx::ShapeError);
}

TEST(SinusoidalEmbedding, HandCheckedFrequency) {
    // dim 8: w_1 = 10000^(-2/8) = 0.1
    auto e = md::sinusoidal_embedding(3.0, 8);
    EXPECT_NEAR(e[0], std::sin(3.0), 1e-15);
    EXPECT_NEAR(e[1], std::cos(3.0), 1e-15);
    EXPECT_NEAR(e[2], std::sin(0.3), 1e-15);
    EXPECT_NEAR(e[3], std::cos(0.3), 1e-15);
    EXPECT_NEAR(e[4], std::sin(0.03), 1e-15);
    EXPECT_NEAR(e[7], std::cos(0.003), 1e-15);
}

TEST(SinusoidalEmbedding, OddDimLeavesLastZero) {
    auto e = md::sinusoidal_embedding(2.0, 5);
    EXPECT_EQ(e[4], 0.0);
}

TEST(TimeEmbed, DeterministicAndDistinct) {
    Rng rng(2);
    auto p = md::init_denoiser(tiny_config(), rng);
    EXPECT_EQ(md::time_embed(p, 17), md::time_embed(p, 17));
    Tensor a = md::time_embed(p, 1);
    Tensor b = md::time_embed(p, 1000);
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    EXPECT_GT(std::abs(std::sqrt(na) - std::sqrt(nb)), 0.0);
}

TEST(TimeEmbed, MatchesProjectedSinusoid) {
    Rng rng(3);
    auto p = md::init_denoiser(tiny_config(), rng);
    p.tensors["time.bias"] = random_tensor({1, 8}, rng);
    auto e = md::sinusoidal_embedding(250.0, 8);
    Tensor got = md::time_embed(p, 250);
    const Tensor& w = p.tensors["time.weight"];
    for (std::size_t c = 0; c < 8; ++c) {
        double expected = p.tensors["time.bias"](0, c);
        for (std::size_t i = 0; i < 8; ++i) {
            expected += e[i] * w(i, c);
        }
        EXPECT_NEAR(got(0, c), expected, 1e-12);
    }
}

TEST(TimeEmbed, OutOfRangeFails) {
    Rng rng(4);
    auto p = md::init_denoiser(tiny_config(), rng);
    EXPECT_THROW(md::time_embed(p, 0), omnifx::Error);
    EXPECT_THROW(md::time_embed(p, 1001), omnifx::Error);
}

TEST(ModelConfig, ValidatesDivisibility) {
    auto c = tiny_config();
    c.patch = 3;
    EXPECT_THROW(c.validate(), omnifx::Error);
    c = tiny_config();
    c.heads = 3;
    EXPECT_THROW(c.validate(), omnifx::Error);
    EXPECT_NO_THROW(md::ModelConfig::toy().validate());
}

TEST(ModelConfig, ToyDefaults) {
    auto c = md::ModelConfig::toy();
    EXPECT_EQ(c.frames, 8u);
    EXPECT_EQ(c.height, 24u);
    EXPECT_EQ(c.width, 24u);
    EXPECT_EQ(c.channels, 1u);
    EXPECT_EQ(c.patch, 4u);
    EXPECT_EQ(c.dim, 64u);
    EXPECT_EQ(c.heads, 2u);
    EXPECT_EQ(c.blocks, 4u);
    EXPECT_EQ(c.ffn_hidden, 128u);
}

TEST(InitDenoiser, SharedSpatialLoraPerProjection) {
    Rng rng(5);
    auto p = md::init_denoiser(tiny_config(), rng);
    std::size_t spatial_sets = 0;
    for (const auto& [name, t] : p.tensors) {
        if (name.find("spatial_lora.a") != std::string::npos) {
            ++spatial_sets;
        }
    }
    // one set each for q, k, v per block, independent of the condition count
    EXPECT_EQ(spatial_sets, 3u);
}

TEST(ForwardDenoiser, UnconditionalRuns) {
    Rng rng(6);
    auto p = md::init_denoiser(tiny_config(), rng);
    Video x = random_video(2, 4, 4, rng);
    auto out = md::forward_denoiser(x, 10, x.frame(0), {}, p);
    EXPECT_TRUE(out.v.same_extents(x));
    for (double v : out.v.values()) {
        EXPECT_TRUE(std::isfinite(v));
    }
}

TEST(ForwardDenoiser, ZeroBMakesExpertsIrrelevant) {
    Rng rng(7);
    auto p = md::init_denoiser(tiny_config(), rng);
    Video x = random_video(2, 4, 4, rng);
    std::vector<cd::ConditionPair> conds{{1, square(4, 4, 0, 0, 2, 2)}};
    auto base = md::forward_denoiser(x, 500, x.frame(0), conds, p);
    for (auto& [name, t] : p.tensors) {
        if (name.find("expert") != std::string::npos || name.ends_with("gate")) {
            t = random_tensor(t.shape(), rng);
        }
    }
    for (auto& [name, t] : p.tensors) {
        if (is_lora_b(name)) {
            t.fill(0.0);
        }
    }
    EXPECT_EQ(md::forward_denoiser(x, 500, x.frame(0), conds, p).v, base.v);
}

TEST(ForwardDenoiser, MaskExtentMismatchFails) {
    Rng rng(8);
    auto p = md::init_denoiser(tiny_config(), rng);
    Video x = random_video(2, 4, 4, rng);
    std::vector<cd::ConditionPair> conds{{1, Mask(5, 4)}};
    EXPECT_THROW(md::forward_denoiser(x, 5, x.frame(0), conds, p), omnifx::ShapeError);
}

TEST(ForwardDenoiser, BitIdenticalOnRepeat) {
    Rng rng(9);
    auto p = md::init_denoiser(tiny_config(), rng);
    randomize_b(p, rng);
    Video x = random_video(2, 4, 4, rng);
    std::vector<cd::ConditionPair> conds{{0, square(4, 4, 0, 0, 2, 4)}, {2, square(4, 4, 2, 0, 4, 4)}};
    auto a = md::forward_denoiser(x, 321, x.frame(0), conds, p);
    auto b = md::forward_denoiser(x, 321, x.frame(0), conds, p);
    EXPECT_EQ(a.v, b.v);
    EXPECT_EQ(a.aux, b.aux);
}

TEST(ForwardDenoiser, OneBlockLatentIgnoresSpatialMask) {
    Rng rng(10);
    auto p = md::init_denoiser(tiny_config(), rng);
    randomize_b(p, rng);
    Video x = random_video(2, 4, 4, rng);
    std::vector<cd::ConditionPair> a{{1, square(4, 4, 0, 0, 2, 2)}};
    std::vector<cd::ConditionPair> b{{1, square(4, 4, 2, 2, 4, 4)}};
    auto va = md::forward_denoiser(x, 100, x.frame(0), a, p).v;
    auto vb = md::forward_denoiser(x, 100, x.frame(0), b, p).v;
    for (std::size_t i = 0; i < va.size(); ++i) {
        ASSERT_NEAR(va.values()[i], vb.values()[i], 1e-12);
    }
}

TEST(ForwardDenoiser, TwoBlocksCarrySpatialMaskToLatent) {
    auto config = tiny_config();
    config.blocks = 2;
    Rng rng(11);
    auto p = md::init_denoiser(config, rng);
    randomize_b(p, rng);
    Video x = random_video(2, 4, 4, rng);
    std::vector<cd::ConditionPair> a{{1, square(4, 4, 0, 0, 2, 2)}};
    std::vector<cd::ConditionPair> b{{1, square(4, 4, 2, 2, 4, 4)}};
    auto va = md::forward_denoiser(x, 100, x.frame(0), a, p).v;
    auto vb = md::forward_denoiser(x, 100, x.frame(0), b, p).v;
    double diff = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        diff = std::max(diff, std::abs(va.values()[i] - vb.values()[i]));
    }
    EXPECT_GT(diff, 1e-9);
}

TEST(Attention, MatchesHandRolledThreeTokenAttention) {
    md::ModelConfig c;
    c.frames = 3;
    c.height = 1;
    c.width = 1;
    c.patch = 1;
    c.dim = 4;
    c.heads = 2;
    c.blocks = 1;
    c.ffn_hidden = 4;
    c.attn_lora_rank = 2;
    c.moe.rank = 2;
    Rng rng(12);
    auto p = md::init_denoiser(c, rng);
    Tensor x = random_tensor({3, 4}, rng);
    auto layout = cd::build_layout(0, c.text_len, c.spatial_len(), 3);
    Tensor got = md::attention_sublayer(p, 0, x, layout);

    Tensor q = nx::matmul(x, p.tensors["block0.attn.q.weight"]);
    Tensor k = nx::matmul(x, p.tensors["block0.attn.k.weight"]);
    Tensor v = nx::matmul(x, p.tensors["block0.attn.v.weight"]);
    Tensor merged({3, 4});
    const double dk = 2.0;
    for (std::size_t h = 0; h < 2; ++h) {
        for (std::size_t i = 0; i < 3; ++i) {
            double s[3];
            double top = -1e300;
            for (std::size_t j = 0; j < 3; ++j) {
                s[j] = (q(i, 2 * h) * k(j, 2 * h) + q(i, 2 * h + 1) * k(j, 2 * h + 1)) / std::sqrt(dk);
                top = std::max(top, s[j]);
            }
            double z = 0.0;
            for (double& e : s) {
                e = std::exp(e - top);
                z += e;
            }
            for (std::size_t col = 0; col < 2; ++col) {
                double acc = 0.0;
                for (std::size_t j = 0; j < 3; ++j) {
                    acc += s[j] / z * v(j, 2 * h + col);
                }
                merged(i, 2 * h + col) = acc;
            }
        }
    }
    Tensor expected = nx::matmul(merged, p.tensors["block0.attn.o.weight"]);
    EXPECT_LE(nx::max_abs_diff(got, expected), 1e-12);
}

TEST(DenoiserGradient, FullModelMatchesFiniteDifferences) {
    md::ModelConfig c;
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
    Rng rng(13);
    auto params = md::init_denoiser(c, rng);
    randomize_b(params, rng);
    Video x = random_video(1, 2, 2, rng);
    Video ref = random_video(1, 2, 2, rng);
    std::vector<cd::ConditionPair> conds{{2, square(2, 2, 0, 0, 1, 2)}};

    std::vector<std::string> names;
    std::vector<Tensor> values;
    for (const auto& [name, t] : params.tensors) {
        names.push_back(name);
        values.push_back(t);
    }
    for (auto routing : {omnifx::moe::RoutingMode::Full, omnifx::moe::RoutingMode::TopK}) {
        auto fn = [&](Graph& g, std::span<const Var> p) {
            std::map<std::string, Var> vars;
            for (std::size_t i = 0; i < names.size(); ++i) {
                vars.emplace(names[i], p[i]);
            }
            auto out = md::denoise(g, md::BoundParams(std::move(vars)), c, x, 400, ref, conds, {routing});
            return nx::add(omnifx::testing::weighted_sum(out.v_tokens), nx::scale(out.aux, 0.01));
        };
        auto report = nx::finite_diff_check(fn, values);
        EXPECT_LE(report.max_error, 1e-4) << names[report.worst_param] << "[" << report.worst_index << "]";
    }
}
