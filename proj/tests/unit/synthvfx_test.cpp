// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>

#include "omnifx/error.hpp"
#include "omnifx/synthvfx.hpp"

namespace sy = omnifx::synth;
using omnifx::Mask;
using omnifx::Rng;
using omnifx::Video;
using sy::EffectKind;

namespace {

Mask union_of(const sy::SampleRecord& r) {
    Mask m(r.target.height(), r.target.width());
    for (const auto& c : r.conditions) {
        m = m.united(c.mask);
    }
    return m;
}

double mean_in(const Video& v, std::size_t f, const Mask& m) {
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t y = 0; y < v.height(); ++y) {
        for (std::size_t x = 0; x < v.width(); ++x) {
            if (m.at(y, x)) {
                total += v.at(f, y, x);
                ++n;
            }
        }
    }
    return total / static_cast<double>(n);
}

std::size_t bright_in(const Video& v, std::size_t f, const Mask& m) {
    std::size_t n = 0;
    for (std::size_t y = 0; y < v.height(); ++y) {
        for (std::size_t x = 0; x < v.width(); ++x) {
            n += m.at(y, x) && v.at(f, y, x) > 0.5 ? 1 : 0;
        }
    }
    return n;
}

/// Independent check that a plain record shows its effect's signature.
::testing::AssertionResult has_signature(const sy::SampleRecord& r) {
    const Video& v = r.target;
    const Mask& m = r.conditions.at(0).mask;
    const std::size_t last = v.frames() - 1;
    switch (sy::effect_from_id(r.conditions[0].effect_id)) {
    case EffectKind::Fade:
        for (std::size_t f = 1; f < v.frames(); ++f) {
            if (!(mean_in(v, f, m) < mean_in(v, f - 1, m))) {
                return ::testing::AssertionFailure() << "fade not decreasing at frame " << f;
            }
        }
        break;
    case EffectKind::Invert:
        for (std::size_t y = 0; y < v.height(); ++y) {
            for (std::size_t x = 0; x < v.width(); ++x) {
                if (m.at(y, x) && std::abs(v.at(last, y, x) - (1.0 - v.at(0, y, x))) > 1e-12) {
                    return ::testing::AssertionFailure() << "invert endpoint mismatch at " << y << "," << x;
                }
            }
        }
        break;
    case EffectKind::Grow:
        for (std::size_t f = 1; f < v.frames(); ++f) {
            if (bright_in(v, f, m) < bright_in(v, f - 1, m)) {
                return ::testing::AssertionFailure() << "grow shrank at frame " << f;
            }
        }
        if (!(bright_in(v, last, m) > bright_in(v, 0, m))) {
            return ::testing::AssertionFailure() << "grow did not grow";
        }
        break;
    case EffectKind::Blink:
        for (std::size_t f = 0; f < v.frames(); ++f) {
            for (std::size_t y = 0; y < v.height(); ++y) {
                for (std::size_t x = 0; x < v.width(); ++x) {
                    if (!m.at(y, x)) {
                        continue;
                    }
                    double expected = f % 2 == 0 ? v.at(0, y, x) : 0.1;
                    if (v.at(f, y, x) != expected) {
                        return ::testing::AssertionFailure() << "blink mismatch at frame " << f;
                    }
                }
            }
        }
        if (!(mean_in(v, 0, m) > 0.1 + 1e-6)) {
            return ::testing::AssertionFailure() << "blink mask holds no blob";
        }
        break;
    }
    return ::testing::AssertionSuccess();
}

/// Every pixel outside `m` is constant over time.
bool static_outside(const Video& v, const Mask& m) {
    for (std::size_t f = 1; f < v.frames(); ++f) {
        for (std::size_t y = 0; y < v.height(); ++y) {
            for (std::size_t x = 0; x < v.width(); ++x) {
                if (!m.at(y, x) && v.at(f, y, x) != v.at(0, y, x)) {
                    return false;
                }
            }
        }
    }
    return true;
}

std::vector<sy::SampleRecord> pool(std::size_t per_kind, std::uint64_t seed) {
    Rng rng(seed);
    return sy::make_dataset(per_kind * 4, {}, rng);
}

} // namespace

namespace omnifx::synth {
void PrintTo(EffectKind kind, std::ostream* os) {
    *os << effect_name(kind);
}
} // namespace omnifx::synth

TEST(Effects, NamesRoundTrip) {
    for (auto kind : sy::kAllEffects) {
        EXPECT_EQ(sy::parse_effect(sy::effect_name(kind)), kind);
        EXPECT_EQ(sy::effect_from_id(sy::effect_id(kind)), kind);
    }
    EXPECT_EQ(sy::effect_name(EffectKind::Grow), "grow");
    EXPECT_THROW(sy::parse_effect("Fade"), omnifx::Error);
    EXPECT_THROW(sy::effect_from_id(4), omnifx::Error);
}

class RenderSample : public ::testing::TestWithParam<EffectKind> {};

TEST_P(RenderSample, SignatureHoldsAcrossSeeds) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        auto r = sy::render_sample(GetParam(), rng);
        ASSERT_EQ(r.conditions.size(), 1u);
        ASSERT_TRUE(has_signature(r)) << "seed " << seed;
    }
}

TEST_P(RenderSample, ChangesConfinedToMask) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        auto r = sy::render_sample(GetParam(), rng);
        ASSERT_TRUE(static_outside(r.target, r.conditions[0].mask)) << "seed " << seed;
    }
}

TEST_P(RenderSample, ReferenceIsFrameZero) {
    Rng rng(3);
    auto r = sy::render_sample(GetParam(), rng);
    EXPECT_EQ(r.reference, r.target.frame(0));
    EXPECT_EQ(r.provenance.category, sy::Category::Plain);
}

TEST_P(RenderSample, ValuesInUnitRangeAndMaskNonTrivial) {
    Rng rng(4);
    auto r = sy::render_sample(GetParam(), rng);
    for (double v : r.target.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_FALSE(r.conditions[0].mask.empty());
    EXPECT_FALSE(r.conditions[0].mask.full());
}

INSTANTIATE_TEST_SUITE_P(AllKinds, RenderSample, ::testing::ValuesIn(sy::kAllEffects),
                         [](const auto& info) { return std::string(sy::effect_name(info.param)); });

TEST(RenderExamples, FadeInMaskMeanStrictlyDecreasing) {
    Rng rng(5);
    auto r = sy::render_sample(EffectKind::Fade, rng);
    const Mask& m = r.conditions[0].mask;
    for (std::size_t f = 1; f < r.target.frames(); ++f) {
        EXPECT_LT(mean_in(r.target, f, m), mean_in(r.target, f - 1, m));
    }
}

TEST(RenderExamples, OutOfMaskFirstLastDiffIsZero) {
    Rng rng(6);
    auto r = sy::render_sample(EffectKind::Invert, rng);
    const Mask& m = r.conditions[0].mask;
    std::size_t last = r.target.frames() - 1;
    for (std::size_t y = 0; y < 24; ++y) {
        for (std::size_t x = 0; x < 24; ++x) {
            if (!m.at(y, x)) {
                EXPECT_EQ(r.target.at(last, y, x) - r.target.at(0, y, x), 0.0);
            }
        }
    }
}

TEST(Splice, FrameZeroIsSpliceOfSourceFrameZeros) {
    auto src = pool(1, 7);
    auto out = sy::splice(src[0], src[1], 10, 3, -4);
    for (std::size_t y = 0; y < 24; ++y) {
        for (std::size_t x = 0; x < 24; ++x) {
            double expected = x < 10 ? src[0].target.at(0, y, x + 3) : src[1].target.at(0, y, x - 4);
            ASSERT_EQ(out.target.at(0, y, x), expected);
        }
    }
    EXPECT_EQ(out.reference, out.target.frame(0));
    ASSERT_EQ(out.conditions.size(), 2u);
    EXPECT_EQ(out.conditions[0].effect_id, src[0].conditions[0].effect_id);
    EXPECT_EQ(out.conditions[1].effect_id, src[1].conditions[0].effect_id);
}

TEST(Splice, MasksAreCroppedToTheirSegment) {
    auto src = pool(1, 8);
    auto out = sy::splice(src[2], src[3], 12, 0, 0);
    for (std::size_t y = 0; y < 24; ++y) {
        for (std::size_t x = 0; x < 24; ++x) {
            EXPECT_EQ(out.conditions[0].mask.at(y, x), x < 12 && src[2].conditions[0].mask.at(y, x));
            EXPECT_EQ(out.conditions[1].mask.at(y, x), x >= 12 && src[3].conditions[0].mask.at(y, x));
        }
    }
    EXPECT_TRUE(static_outside(out.target, union_of(out)));
}

TEST(Splice, BadGeometryFails) {
    auto src = pool(1, 9);
    EXPECT_THROW(sy::splice(src[0], src[1], 0, 0, 0), omnifx::Error);
    EXPECT_THROW(sy::splice(src[0], src[1], 24, 0, 0), omnifx::Error);
    EXPECT_THROW(sy::splice(src[0], src[1], 12, 13, 0), omnifx::Error);
    EXPECT_THROW(sy::splice(src[0], src[1], 12, 0, 1), omnifx::Error);
}

TEST(FreezeSegment, FrozenSegmentIsStaticWithEmptyMask) {
    auto src = pool(1, 10);
    auto out = sy::splice(src[0], src[3], 12, 0, 0);
    sy::freeze_segment(out, 1);
    EXPECT_TRUE(out.conditions[1].mask.empty());
    EXPECT_EQ(out.conditions[1].effect_id, src[3].conditions[0].effect_id);
    EXPECT_EQ(out.provenance.frozen, (std::vector<bool>{false, true}));
    for (std::size_t f = 1; f < 8; ++f) {
        for (std::size_t y = 0; y < 24; ++y) {
            for (std::size_t x = 12; x < 24; ++x) {
                ASSERT_EQ(out.target.at(f, y, x), out.target.at(0, y, x));
            }
        }
    }
    EXPECT_TRUE(static_outside(out.target, union_of(out)));
}

TEST(FreezeSegment, PlainRecordFails) {
    auto src = pool(1, 11);
    EXPECT_THROW(sy::freeze_segment(src[0], 0), omnifx::Error);
}

TEST(AugmentBatch, CategoryFractions) {
    auto src = pool(4, 12);
    Rng rng(13);
    std::map<sy::Category, int> counts;
    for (int i = 0; i < 10000; ++i) {
        counts[sy::augment_batch(src, rng).provenance.category]++;
    }
    EXPECT_NEAR(counts[sy::Category::Plain] / 1e4, 0.2, 0.02);
    EXPECT_NEAR(counts[sy::Category::CropSplice1] / 1e4, 0.4, 0.02);
    EXPECT_NEAR(counts[sy::Category::CropSplice2] / 1e4, 0.4, 0.02);
}

TEST(AugmentBatch, SpliceKindsAndFreezing) {
    auto src = pool(4, 14);
    Rng rng(15);
    std::size_t segments = 0, frozen = 0;
    for (int i = 0; i < 10000; ++i) {
        auto r = sy::augment_batch(src, rng);
        if (r.provenance.category == sy::Category::Plain) {
            EXPECT_EQ(r.conditions.size(), 1u);
            EXPECT_TRUE(r.provenance.frozen.empty());
            continue;
        }
        ASSERT_EQ(r.conditions.size(), 2u);
        bool same = r.conditions[0].effect_id == r.conditions[1].effect_id;
        EXPECT_EQ(same, r.provenance.category == sy::Category::CropSplice1);
        EXPECT_GE(r.provenance.cut, 6u);
        EXPECT_LE(r.provenance.cut, 18u);
        for (std::size_t s = 0; s < 2; ++s) {
            ++segments;
            if (r.provenance.frozen[s]) {
                ++frozen;
                EXPECT_TRUE(r.conditions[s].mask.empty());
            }
        }
        EXPECT_TRUE(static_outside(r.target, union_of(r)));
        EXPECT_EQ(r.reference, r.target.frame(0));
    }
    EXPECT_NEAR(static_cast<double>(frozen) / static_cast<double>(segments), 0.2, 0.02);
}

TEST(AugmentBatch, EmptyPoolFails) {
    Rng rng(16);
    EXPECT_THROW(sy::augment_batch({}, rng), omnifx::Error);
}

TEST(Provenance, TagRoundTrip) {
    auto src = pool(2, 17);
    Rng rng(18);
    for (int i = 0; i < 200; ++i) {
        auto p = sy::augment_batch(src, rng).provenance;
        EXPECT_EQ(sy::Provenance::parse(p.tag()), p);
    }
    EXPECT_EQ(sy::Provenance{}.tag(), "plain");
    EXPECT_THROW(sy::Provenance::parse("sideways"), omnifx::Error);
}

TEST(MakeDataset, BalancedOverKinds) {
    Rng rng(19);
    auto data = sy::make_dataset(100, {}, rng);
    std::map<std::size_t, int> counts;
    for (const auto& r : data) {
        counts[r.conditions[0].effect_id]++;
    }
    ASSERT_EQ(counts.size(), 4u);
    for (const auto& [id, n] : counts) {
        EXPECT_EQ(n, 25) << id;
    }
}

TEST(MakeDataset, SeedReproducible) {
    Rng a(20), b(20);
    EXPECT_EQ(sy::make_dataset(12, {}, a), sy::make_dataset(12, {}, b));
}

TEST(MakeDataset, EveryRecordPassesItsSignature) {
    Rng rng(21);
    for (const auto& r : sy::make_dataset(200, {}, rng)) {
        ASSERT_TRUE(has_signature(r));
        ASSERT_TRUE(static_outside(r.target, r.conditions[0].mask));
    }
}

TEST(SceneConfig, Validation) {
    sy::SceneConfig c;
    EXPECT_NO_THROW(c.validate());
    c.min_radius = 5.0;
    c.max_radius = 4.0;
    EXPECT_THROW(c.validate(), omnifx::Error);
}
