// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "iif_oracle.hpp"
#include "omnifx/conditioning.hpp"
#include "omnifx/error.hpp"
#include "omnifx/model.hpp"
#include "support.hpp"

namespace cd = omnifx::conditioning;
namespace nx = omnifx::numerics;
using nx::Tensor;
using omnifx::Mask;
using omnifx::Rng;

TEST(Layout, UnconditionalIsLatentOnly) {
    auto layout = cd::build_layout(0, 2, 3, 4);
    EXPECT_EQ(layout.condition_count(), 0u);
    EXPECT_EQ(layout.latent(), (cd::Span{0, 4}));
    EXPECT_EQ(layout.length(), 4u);
}

TEST(Layout, SingleConditionSpans) {
    auto layout = cd::build_layout(1, 2, 3, 4);
    EXPECT_EQ(layout.conditions()[0].text, (cd::Span{0, 2}));
    EXPECT_EQ(layout.conditions()[0].spatial, (cd::Span{2, 5}));
    EXPECT_EQ(layout.latent(), (cd::Span{5, 9}));
    EXPECT_EQ(layout.length(), 9u);
}

TEST(Layout, TwoConditionsLength) {
    EXPECT_EQ(cd::build_layout(2, 1, 1, 2).length(), 6u);
}

TEST(Layout, ZeroLatentFails) {
    EXPECT_THROW(cd::build_layout(1, 1, 1, 0), omnifx::Error);
}

TEST(Layout, SpansCoverSequenceContiguously) {
    auto layout = cd::build_layout(3, 2, 4, 5);
    std::size_t cursor = 0;
    for (const auto& c : layout.conditions()) {
        EXPECT_EQ(c.text.begin, cursor);
        EXPECT_EQ(c.spatial.begin, c.text.end);
        cursor = c.spatial.end;
    }
    EXPECT_EQ(layout.latent().begin, cursor);
    EXPECT_EQ(layout.latent().end, layout.length());
    EXPECT_EQ(layout.segment_of(0), cd::Segment::Text);
    EXPECT_EQ(layout.segment_of(2), cd::Segment::Spatial);
    EXPECT_EQ(layout.segment_of(layout.length() - 1), cd::Segment::Latent);
    EXPECT_EQ(layout.condition_of(7), std::optional<std::size_t>(1));
    EXPECT_FALSE(layout.condition_of(layout.length() - 1).has_value());
}

TEST(IifMask, UnconditionalIsFullAttention) {
    auto mask = cd::build_iif_mask(cd::build_layout(0, 1, 1, 5));
    EXPECT_EQ(mask, cd::full_attention_mask(5));
}

TEST(IifMask, HandEnumeratedSingleCondition) {
    auto mask = cd::build_iif_mask(cd::build_layout(1, 1, 1, 1));
    std::set<std::pair<std::size_t, std::size_t>> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}, {2, 2}};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_EQ(mask.attendable(i, j), expected.count({i, j}) == 1) << i << "," << j;
        }
    }
}

TEST(IifMask, TwoConditionsMatchBruteForce) {
    auto layout = cd::build_layout(2, 2, 3, 4);
    auto mask = cd::build_iif_mask(layout);
    auto tokens = omnifx::testing::oracle_tokens(2, 2, 3, 4);
    ASSERT_EQ(tokens.size(), mask.length());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        for (std::size_t j = 0; j < tokens.size(); ++j) {
            EXPECT_EQ(mask.attendable(i, j), omnifx::testing::oracle_attendable(tokens[i], tokens[j]));
        }
    }
}

TEST(IifMask, ConditionPermutationConjugatesMask) {
    const std::size_t te = 2, sp = 3, lat = 4, n = 3;
    auto layout = cd::build_layout(n, te, sp, lat);
    auto mask = cd::build_iif_mask(layout);
    // swap conditions 0 and 2; all pair blocks have equal length
    std::vector<std::size_t> perm(layout.length());
    std::iota(perm.begin(), perm.end(), 0);
    const std::size_t block = te + sp;
    for (std::size_t t = 0; t < block; ++t) {
        std::swap(perm[t], perm[2 * block + t]);
    }
    for (std::size_t i = 0; i < perm.size(); ++i) {
        for (std::size_t j = 0; j < perm.size(); ++j) {
            EXPECT_EQ(mask.attendable(perm[i], perm[j]), mask.attendable(i, j));
        }
    }
}

TEST(TextConditions, IdenticalIdsGiveIdenticalBlocks) {
    Rng rng(1);
    Tensor table = omnifx::testing::random_tensor({4, 3}, rng);
    Tensor pos = omnifx::testing::random_tensor({2, 3}, rng);
    const std::size_t ids[] = {1, 1};
    auto blocks = cd::encode_text_conditions(ids, table, pos);
    EXPECT_EQ(blocks[0], blocks[1]);
}

TEST(TextConditions, OrderSwapPermutesBlocks) {
    Rng rng(2);
    Tensor table = omnifx::testing::random_tensor({4, 3}, rng);
    Tensor pos = omnifx::testing::random_tensor({2, 3}, rng);
    const std::size_t ab[] = {0, 3};
    const std::size_t ba[] = {3, 0};
    auto x = cd::encode_text_conditions(ab, table, pos);
    auto y = cd::encode_text_conditions(ba, table, pos);
    EXPECT_EQ(x[0], y[1]);
    EXPECT_EQ(x[1], y[0]);
}

TEST(TextConditions, AdditiveCompositionOracle) {
    Tensor table = Tensor::matrix({{0.1, 0.2}, {0, 0}, {0, 0}, {0, 0}});
    Tensor pos = Tensor::matrix({{1, 1}});
    const std::size_t ids[] = {0};
    auto blocks = cd::encode_text_conditions(ids, table, pos);
    EXPECT_DOUBLE_EQ(blocks[0](0, 0), 1.1);
    EXPECT_DOUBLE_EQ(blocks[0](0, 1), 1.2);
}

TEST(TextConditions, OutOfVocabularyFails) {
    const std::size_t ids[] = {4};
    EXPECT_THROW(cd::encode_text_conditions(ids, Tensor({4, 2}), Tensor({1, 2})), omnifx::Error);
}

TEST(SpatialConditions, ZeroMaskGivesPositionsPlusBias) {
    Rng rng(3);
    Tensor w = omnifx::testing::random_tensor({1, 3}, rng);
    Tensor b = omnifx::testing::random_tensor({1, 3}, rng);
    Tensor pos = omnifx::testing::random_tensor({4, 3}, rng);
    const Mask masks[] = {Mask(4, 4)};
    auto blocks = cd::encode_spatial_conditions(masks, 2, w, b, pos);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            EXPECT_DOUBLE_EQ(blocks[0](r, c), pos(r, c) + b(0, c));
        }
    }
}

TEST(SpatialConditions, FullMinusEmptyIsConstantOffset) {
    Rng rng(4);
    Tensor w = omnifx::testing::random_tensor({1, 3}, rng);
    Tensor b = omnifx::testing::random_tensor({1, 3}, rng);
    Tensor pos = omnifx::testing::random_tensor({4, 3}, rng);
    const Mask masks[] = {Mask(4, 4, true), Mask(4, 4, false)};
    auto blocks = cd::encode_spatial_conditions(masks, 2, w, b, pos);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            EXPECT_NEAR(blocks[0](r, c) - blocks[1](r, c), w(0, c), 1e-15);
        }
    }
}

TEST(SpatialConditions, PoolingMatchesDirectAverage) {
    Mask m(4, 4);
    m.fill_rect(0, 0, 4, 2); // left half
    auto pooled = cd::pool_mask(m, 4);
    ASSERT_EQ(pooled.size(), 1u);
    EXPECT_DOUBLE_EQ(pooled[0], 0.5);
    auto fine = cd::pool_mask(m, 2);
    EXPECT_EQ(fine, (std::vector<double>{1.0, 0.0, 1.0, 0.0}));
    Mask odd(4, 4);
    odd.set(0, 0, true);
    odd.set(1, 1, true);
    odd.set(0, 3, true);
    EXPECT_EQ(cd::pool_mask(odd, 2), (std::vector<double>{0.5, 0.25, 0.0, 0.0}));
}

TEST(SpatialConditions, NonDivisibleExtentsFail) {
    const Mask masks[] = {Mask(5, 4)};
    EXPECT_THROW(cd::encode_spatial_conditions(masks, 2, Tensor({1, 2}), Tensor({1, 2}), Tensor({4, 2})),
                 omnifx::Error);
}

namespace {

omnifx::model::DenoiserParams small_model(std::size_t blocks, std::uint64_t seed) {
    omnifx::model::ModelConfig c;
    c.frames = 1;
    c.height = 4;
    c.width = 4;
    c.patch = 2;
    c.dim = 8;
    c.heads = 2;
    c.blocks = blocks;
    c.ffn_hidden = 8;
    c.text_len = 2;
    c.attn_lora_rank = 2;
    c.moe.rank = 2;
    Rng rng(seed);
    auto p = omnifx::model::init_denoiser(c, rng);
    // non-zero LoRA B factors
    for (auto& [name, t] : p.tensors) {
        if (name.ends_with(".b") || name.find("lora.b") != std::string::npos) {
            for (auto& v : t.values()) {
                v = std::normal_distribution<double>(0.0, 0.3)(rng);
            }
        }
    }
    return p;
}

} // namespace

TEST(Isolation, ConditionOutputsIgnoreOtherConditions) {
    auto params = small_model(1, 5);
    auto layout = cd::build_layout(3, 2, 4, 4);
    Rng rng(6);
    Tensor tokens = omnifx::testing::random_tensor({layout.length(), 8}, rng);
    Tensor base = omnifx::model::attention_sublayer(params, 0, tokens, layout);
    for (std::size_t j = 0; j < 3; ++j) {
        Tensor perturbed = tokens;
        const auto& spans = layout.conditions()[j];
        for (std::size_t r = spans.text.begin; r < spans.spatial.end; ++r) {
            for (std::size_t c = 0; c < 8; ++c) {
                perturbed(r, c) += 3.0 * std::normal_distribution<double>()(rng);
            }
        }
        Tensor out = omnifx::model::attention_sublayer(params, 0, perturbed, layout);
        for (std::size_t i = 0; i < 3; ++i) {
            if (i == j) {
                continue;
            }
            const auto& own = layout.conditions()[i];
            for (std::size_t r = own.text.begin; r < own.spatial.end; ++r) {
                for (std::size_t c = 0; c < 8; ++c) {
                    ASSERT_NEAR(out(r, c), base(r, c), 1e-12);
                }
            }
        }
    }
}

TEST(Isolation, LatentOutputsIgnoreSpatialTokens) {
    auto params = small_model(1, 7);
    auto layout = cd::build_layout(2, 2, 4, 4);
    Rng rng(8);
    Tensor tokens = omnifx::testing::random_tensor({layout.length(), 8}, rng);
    Tensor base = omnifx::model::attention_sublayer(params, 0, tokens, layout);
    Tensor perturbed = tokens;
    for (const auto& spans : layout.conditions()) {
        for (std::size_t r = spans.spatial.begin; r < spans.spatial.end; ++r) {
            for (std::size_t c = 0; c < 8; ++c) {
                perturbed(r, c) = std::normal_distribution<double>(0.0, 5.0)(rng);
            }
        }
    }
    Tensor out = omnifx::model::attention_sublayer(params, 0, perturbed, layout);
    for (std::size_t r = layout.latent().begin; r < layout.latent().end; ++r) {
        for (std::size_t c = 0; c < 8; ++c) {
            ASSERT_NEAR(out(r, c), base(r, c), 1e-12);
        }
    }
}
