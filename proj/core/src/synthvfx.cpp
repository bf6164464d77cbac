// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/synthvfx.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "omnifx/error.hpp"

namespace omnifx::synth {

namespace {

struct Blob {
    double cy = 0.0;
    double cx = 0.0;
    double radius = 0.0;
};

double coverage(const Blob& blob, double radius, std::size_t y, std::size_t x) {
    double dy = static_cast<double>(y) - blob.cy;
    double dx = static_cast<double>(x) - blob.cx;
    double d = std::sqrt(dy * dy + dx * dx);
    return std::clamp(radius + 0.5 - d, 0.0, 1.0);
}

struct Rect {
    long y0, x0, y1, x1; // half-open
};

Rect mask_rect(const Blob& blob) {
    double half = 2.0 * blob.radius + 1.0;
    return {std::lround(blob.cy - half), std::lround(blob.cx - half), std::lround(blob.cy + half) + 1,
            std::lround(blob.cx + half) + 1};
}

double uniform_center(double lo, double hi, double fallback, Rng& rng) {
    if (lo > hi) {
        return fallback;
    }
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool clear_of(const Blob& blob, const Rect& rect) {
    // nearest point of the rectangle's pixel span to the blob centre
    double ny = std::clamp(blob.cy, static_cast<double>(rect.y0), static_cast<double>(rect.y1 - 1));
    double nx = std::clamp(blob.cx, static_cast<double>(rect.x0), static_cast<double>(rect.x1 - 1));
    double d = std::hypot(blob.cy - ny, blob.cx - nx);
    return d > blob.radius + 1.5;
}

double mask_centroid_x(const Mask& mask) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t y = 0; y < mask.height(); ++y) {
        for (std::size_t x = 0; x < mask.width(); ++x) {
            if (mask.at(y, x)) {
                sum += static_cast<double>(x);
                ++n;
            }
        }
    }
    return n == 0 ? (static_cast<double>(mask.width()) - 1.0) / 2.0 : sum / static_cast<double>(n);
}

Mask union_of(const SampleRecord& record) {
    Mask out(record.target.height(), record.target.width());
    for (const auto& c : record.conditions) {
        out = out.united(c.mask);
    }
    return out;
}

long pick_offset(const SampleRecord& source, std::size_t begin, std::size_t end) {
    std::size_t width = source.target.width();
    double centre = mask_centroid_x(union_of(source));
    double window = (static_cast<double>(begin) + static_cast<double>(end) - 1.0) / 2.0;
    long lo = -static_cast<long>(begin);
    long hi = static_cast<long>(width) - static_cast<long>(end);
    return std::clamp(std::lround(centre - window), lo, hi);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

long parse_long(std::string_view text, std::string_view tag) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw FormatError("malformed provenance tag '" + std::string(tag) + "'");
    }
    return value;
}

} // namespace

std::string_view effect_name(EffectKind kind) {
    switch (kind) {
    case EffectKind::Fade:
        return "fade";
    case EffectKind::Invert:
        return "invert";
    case EffectKind::Grow:
        return "grow";
    case EffectKind::Blink:
        return "blink";
    }
    throw Error("unknown effect kind");
}

EffectKind parse_effect(std::string_view name) {
    for (EffectKind kind : kAllEffects) {
        if (effect_name(kind) == name) {
            return kind;
        }
    }
    throw Error("unknown effect '" + std::string(name) + "' (expected fade, invert, grow or blink)");
}

std::size_t effect_id(EffectKind kind) { return static_cast<std::size_t>(kind); }

EffectKind effect_from_id(std::size_t id) {
    if (id >= kAllEffects.size()) {
        throw Error("effect id " + std::to_string(id) + " is outside the effect vocabulary");
    }
    return kAllEffects[id];
}

void SceneConfig::validate() const {
    if (frames < 1 || height < 1 || width < 1 || channels < 1) {
        throw Error("scene extents must be positive");
    }
    if (!(min_radius > 0.0 && min_radius <= max_radius)) {
        throw Error("scene blob radii must satisfy 0 < min <= max");
    }
    if (!(second_blob >= 0.0 && second_blob <= 1.0)) {
        throw Error("second-blob probability must lie in [0, 1]");
    }
}

std::string_view category_name(Category category) {
    switch (category) {
    case Category::Plain:
        return "plain";
    case Category::CropSplice1:
        return "crop-splice-1";
    case Category::CropSplice2:
        return "crop-splice-2";
    }
    throw Error("unknown category");
}

std::string Provenance::tag() const {
    std::ostringstream out;
    out << category_name(category);
    if (category != Category::Plain) {
        out << ";cut=" << cut << ";offsets=" << offsets.at(0) << ',' << offsets.at(1) << ";frozen=" << frozen.at(0)
            << ',' << frozen.at(1);
    }
    return out.str();
}

Provenance Provenance::parse(std::string_view tag) {
    auto fields = split(tag, ';');
    Provenance p;
    if (fields[0] == "plain") {
        if (fields.size() != 1) {
            throw FormatError("malformed provenance tag '" + std::string(tag) + "'");
        }
        return p;
    }
    if (fields[0] == "crop-splice-1") {
        p.category = Category::CropSplice1;
    } else if (fields[0] == "crop-splice-2") {
        p.category = Category::CropSplice2;
    } else {
        throw FormatError("unknown provenance category in '" + std::string(tag) + "'");
    }
    for (std::size_t i = 1; i < fields.size(); ++i) {
        auto eq = fields[i].find('=');
        if (eq == std::string_view::npos) {
            throw FormatError("malformed provenance tag '" + std::string(tag) + "'");
        }
        auto key = fields[i].substr(0, eq);
        auto values = split(fields[i].substr(eq + 1), ',');
        if (key == "cut" && values.size() == 1) {
            p.cut = static_cast<std::size_t>(parse_long(values[0], tag));
        } else if (key == "offsets" && values.size() == 2) {
            p.offsets = {parse_long(values[0], tag), parse_long(values[1], tag)};
        } else if (key == "frozen" && values.size() == 2) {
            p.frozen = {parse_long(values[0], tag) != 0, parse_long(values[1], tag) != 0};
        } else {
            throw FormatError("malformed provenance tag '" + std::string(tag) + "'");
        }
    }
    if (p.offsets.size() != 2 || p.frozen.size() != 2) {
        throw FormatError("spliced provenance tag '" + std::string(tag) + "' lacks offsets or frozen flags");
    }
    return p;
}

std::vector<EffectKind> SampleRecord::effects() const {
    std::vector<EffectKind> out;
    for (const auto& c : conditions) {
        out.push_back(effect_from_id(c.effect_id));
    }
    return out;
}

SampleRecord render_sample(EffectKind effect, Rng& rng, const SceneConfig& config) {
    config.validate();
    const double H = static_cast<double>(config.height);
    const double W = static_cast<double>(config.width);

    Blob main;
    main.radius = std::uniform_real_distribution<double>(config.min_radius, config.max_radius)(rng);
    double half = 2.0 * main.radius + 1.0;
    main.cy = uniform_center(half, H - 1.0 - half, (H - 1.0) / 2.0, rng);
    main.cx = uniform_center(half, W - 1.0 - half, (W - 1.0) / 2.0, rng);
    Rect rect = mask_rect(main);

    std::vector<Blob> blobs{main};
    if (std::bernoulli_distribution(config.second_blob)(rng)) {
        for (int attempt = 0; attempt < 32; ++attempt) {
            Blob other;
            other.radius = std::uniform_real_distribution<double>(config.min_radius, config.max_radius)(rng);
            other.cy = std::uniform_real_distribution<double>(0.0, H - 1.0)(rng);
            other.cx = std::uniform_real_distribution<double>(0.0, W - 1.0)(rng);
            if (clear_of(other, rect)) {
                blobs.push_back(other);
                break;
            }
        }
    }

    Mask mask(config.height, config.width);
    mask.fill_rect(rect.y0, rect.x0, rect.y1, rect.x1);

    const double bg = config.background;
    const double amp = config.peak - config.background;
    auto scene = [&](std::size_t y, std::size_t x) {
        double c = 0.0;
        for (const auto& b : blobs) {
            c = std::max(c, coverage(b, b.radius, y, x));
        }
        return bg + amp * c;
    };

    SampleRecord record;
    record.target = Video(config.frames, config.height, config.width, config.channels);
    for (std::size_t f = 0; f < config.frames; ++f) {
        double lambda = config.frames > 1 ? static_cast<double>(f) / static_cast<double>(config.frames - 1) : 0.0;
        for (std::size_t y = 0; y < config.height; ++y) {
            for (std::size_t x = 0; x < config.width; ++x) {
                double s = scene(y, x);
                double v = s;
                if (mask.at(y, x)) {
                    switch (effect) {
                    case EffectKind::Fade:
                        v = s * (1.0 - lambda);
                        break;
                    case EffectKind::Invert:
                        v = (1.0 - lambda) * s + lambda * (1.0 - s);
                        break;
                    case EffectKind::Grow:
                        v = bg + amp * coverage(main, main.radius * (1.0 + lambda), y, x);
                        break;
                    case EffectKind::Blink:
                        v = (f % 2 == 1) ? bg : s;
                        break;
                    }
                }
                for (std::size_t c = 0; c < config.channels; ++c) {
                    record.target.at(f, y, x, c) = v;
                }
            }
        }
    }
    record.reference = record.target.frame(0);
    record.conditions.push_back({effect_id(effect), std::move(mask)});
    return record;
}

void AugmentConfig::validate() const {
    if (!(plain >= 0.0 && splice_one >= 0.0 && plain + splice_one <= 1.0)) {
        throw Error("augmentation category probabilities must be non-negative and sum to at most 1");
    }
    if (!(freeze >= 0.0 && freeze <= 1.0)) {
        throw Error("freeze probability must lie in [0, 1]");
    }
}

SampleRecord splice(const SampleRecord& left, const SampleRecord& right, std::size_t cut, long left_offset,
                    long right_offset) {
    const Video& a = left.target;
    const Video& b = right.target;
    if (!a.same_extents(b)) {
        throw ShapeError("splice: source videos differ in extents");
    }
    const long W = static_cast<long>(a.width());
    if (cut == 0 || cut >= a.width()) {
        throw Error("splice: cut column must lie strictly inside the frame");
    }
    const long c = static_cast<long>(cut);
    if (left_offset < 0 || left_offset + c > W || right_offset > 0 || right_offset < -c) {
        throw Error("splice: segment offsets move a crop outside its source");
    }

    SampleRecord out;
    out.target = Video(a.frames(), a.height(), a.width(), a.channels());
    for (std::size_t f = 0; f < a.frames(); ++f) {
        for (std::size_t y = 0; y < a.height(); ++y) {
            for (long x = 0; x < W; ++x) {
                bool is_left = x < c;
                const Video& src = is_left ? a : b;
                auto sx = static_cast<std::size_t>(x + (is_left ? left_offset : right_offset));
                for (std::size_t ch = 0; ch < a.channels(); ++ch) {
                    out.target.at(f, y, static_cast<std::size_t>(x), ch) = src.at(f, y, sx, ch);
                }
            }
        }
    }
    auto crop = [&](const SampleRecord& src, bool is_left, long offset) {
        for (const auto& cond : src.conditions) {
            Mask m(a.height(), a.width());
            for (std::size_t y = 0; y < a.height(); ++y) {
                for (long x = is_left ? 0 : c; x < (is_left ? c : W); ++x) {
                    m.set(y, static_cast<std::size_t>(x), cond.mask.at(y, static_cast<std::size_t>(x + offset)));
                }
            }
            out.conditions.push_back({cond.effect_id, std::move(m)});
        }
    };
    crop(left, true, left_offset);
    crop(right, false, right_offset);
    out.reference = out.target.frame(0);
    out.provenance.category = Category::CropSplice1;
    out.provenance.cut = cut;
    out.provenance.offsets = {left_offset, right_offset};
    out.provenance.frozen = {false, false};
    return out;
}

void freeze_segment(SampleRecord& record, std::size_t index) {
    Provenance& p = record.provenance;
    if (p.category == Category::Plain || index >= 2 || record.conditions.size() != 2) {
        throw Error("freeze_segment: record is not a two-segment splice");
    }
    Video& v = record.target;
    std::size_t x0 = index == 0 ? 0 : p.cut;
    std::size_t x1 = index == 0 ? p.cut : v.width();
    for (std::size_t f = 1; f < v.frames(); ++f) {
        for (std::size_t y = 0; y < v.height(); ++y) {
            for (std::size_t x = x0; x < x1; ++x) {
                for (std::size_t c = 0; c < v.channels(); ++c) {
                    v.at(f, y, x, c) = v.at(0, y, x, c);
                }
            }
        }
    }
    Mask& m = record.conditions[index].mask;
    m = Mask(m.height(), m.width());
    p.frozen[index] = true;
}

SampleRecord augment_batch(std::span<const SampleRecord> pool, Rng& rng, const AugmentConfig& config) {
    config.validate();
    if (pool.empty()) {
        throw Error("augment_batch: empty pool");
    }
    for (const auto& r : pool) {
        if (r.conditions.size() != 1) {
            throw Error("augment_batch: pool records must carry exactly one condition");
        }
    }
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u < config.plain) {
        SampleRecord out = pool[pick(pool.size())];
        out.provenance = Provenance{};
        return out;
    }
    Category category = u < config.plain + config.splice_one ? Category::CropSplice1 : Category::CropSplice2;

    const SampleRecord& left = pool[pick(pool.size())];
    std::vector<std::size_t> partners;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        bool same = pool[i].conditions[0].effect_id == left.conditions[0].effect_id;
        if (same == (category == Category::CropSplice1)) {
            partners.push_back(i);
        }
    }
    if (partners.empty()) {
        throw Error("augment_batch: a two-effect splice needs at least two effect kinds in the pool");
    }
    const SampleRecord& right = pool[partners[pick(partners.size())]];

    std::size_t width = left.target.width();
    if (width < 2) {
        throw Error("augment_batch: frames must be at least two pixels wide to splice");
    }
    std::size_t lo = std::max<std::size_t>(1, width / 4);
    std::size_t hi = std::max(lo, std::min(width - 1, (3 * width) / 4));
    std::size_t cut = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);

    SampleRecord out = splice(left, right, cut, pick_offset(left, 0, cut), pick_offset(right, cut, width));
    out.provenance.category = category;
    std::bernoulli_distribution freeze(config.freeze);
    for (std::size_t segment = 0; segment < 2; ++segment) {
        if (freeze(rng)) {
            freeze_segment(out, segment);
        }
    }
    return out;
}

std::vector<SampleRecord> make_dataset(std::size_t count, const DatasetMix& mix, Rng& rng,
                                       const SceneConfig& config) {
    if (count < 1) {
        throw Error("make_dataset: count must be at least 1");
    }
    if (mix.kinds.empty()) {
        throw Error("make_dataset: no effect kinds configured");
    }
    std::vector<SampleRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng record_rng(rng());
        out.push_back(render_sample(mix.kinds[i % mix.kinds.size()], record_rng, config));
    }
    return out;
}

} // namespace omnifx::synth
