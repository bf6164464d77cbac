// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/io/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace omnifx::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::size_t to_size(const ConfigEntry& e, const std::string& source) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size()) {
        throw ConfigError(source, e.line, "'" + e.key + "' expects a non-negative integer, got '" + e.value + "'");
    }
    return v;
}

double to_real(const ConfigEntry& e, const std::string& source) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size() || !std::isfinite(v)) {
        throw ConfigError(source, e.line, "'" + e.key + "' expects a real number, got '" + e.value + "'");
    }
    return v;
}

std::string real_text(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

using Setter = std::function<void(RunConfig&, const ConfigEntry&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
    Setter set;
    Getter get; // empty for write-only preset selectors
};

template <typename Field>
Key size_key(Field field) {
    return {[field](RunConfig& c, const ConfigEntry& e, const std::string& s) { field(c) = to_size(e, s); },
            [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <typename Field>
Key real_key(Field field) {
    return {[field](RunConfig& c, const ConfigEntry& e, const std::string& s) { field(c) = to_real(e, s); },
            [field](const RunConfig& c) { return real_text(field(const_cast<RunConfig&>(c))); }};
}

const std::map<std::string, Key>& keys() {
    static const std::map<std::string, Key> table = [] {
        std::map<std::string, Key> k;
        k["model.frames"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.frames; });
        k["model.height"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.height; });
        k["model.width"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.width; });
        k["model.channels"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.channels; });
        k["model.patch"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.patch; });
        k["model.dim"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.dim; });
        k["model.heads"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.heads; });
        k["model.blocks"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.blocks; });
        k["model.ffn_hidden"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.ffn_hidden; });
        k["model.text_len"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.text_len; });
        k["model.vocab"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.vocab; });
        k["model.attn_lora_rank"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.attn_lora_rank; });
        k["model.attn_lora_alpha"] = real_key([](RunConfig& c) -> double& { return c.model.attn_lora_alpha; });
        k["model.timesteps"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.timesteps; });
        k["model.attention"] = {
            [](RunConfig& c, const ConfigEntry& e, const std::string& s) {
                if (e.value == "iif") {
                    c.model.attention = model::AttentionMaskMode::Iif;
                } else if (e.value == "full") {
                    c.model.attention = model::AttentionMaskMode::Full;
                } else {
                    throw ConfigError(s, e.line, "'model.attention' expects iif or full, got '" + e.value + "'");
                }
            },
            [](const RunConfig& c) { return std::string(c.model.attention == model::AttentionMaskMode::Iif ? "iif" : "full"); }};
        k["moe.experts"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.moe.experts; });
        k["moe.top_k"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.moe.top_k; });
        k["moe.rank"] = size_key([](RunConfig& c) -> std::size_t& { return c.model.moe.rank; });
        k["moe.alpha"] = real_key([](RunConfig& c) -> double& { return c.model.moe.alpha; });
        k["moe.preset"] = {[](RunConfig& c, const ConfigEntry& e, const std::string& s) {
                               if (e.value == "toy") {
                                   c.model.moe = moe::MoEConfig::toy();
                               } else if (e.value == "large") {
                                   c.model.moe = moe::MoEConfig::large();
                               } else if (e.value == "four_experts_top1") {
                                   c.model.moe = moe::MoEConfig::four_experts_top1();
                               } else {
                                   throw ConfigError(s, e.line,
                                                     "unknown MoE preset '" + e.value +
                                                         "' (expected toy, large or four_experts_top1)");
                               }
                           },
                           {}};
        k["train.stage1_steps"] = size_key([](RunConfig& c) -> std::size_t& { return c.train.stage1_steps; });
        k["train.stage2_steps"] = size_key([](RunConfig& c) -> std::size_t& { return c.train.stage2_steps; });
        k["train.batch"] = size_key([](RunConfig& c) -> std::size_t& { return c.train.batch; });
        k["train.lr"] = real_key([](RunConfig& c) -> double& { return c.train.lr; });
        k["train.beta"] = real_key([](RunConfig& c) -> double& { return c.train.beta; });
        k["train.dropout"] = real_key([](RunConfig& c) -> double& { return c.train.dropout; });
        k["train.weight_decay"] = real_key([](RunConfig& c) -> double& { return c.train.weight_decay; });
        k["train.band_boundary"] = size_key([](RunConfig& c) -> std::size_t& { return c.train.bands.boundary; });
        k["train.high_fraction"] = real_key([](RunConfig& c) -> double& { return c.train.bands.high_fraction; });
        k["train.preset"] = {[](RunConfig& c, const ConfigEntry& e, const std::string& s) {
                                 auto seed = c.train.seed;
                                 if (e.value == "full") {
                                     c.train = train::TrainConfig::full_schedule();
                                 } else if (e.value == "desk") {
                                     c.train = train::TrainConfig::desk();
                                 } else {
                                     throw ConfigError(s, e.line,
                                                       "unknown trainer preset '" + e.value +
                                                           "' (expected full or desk)");
                                 }
                                 c.train.seed = seed;
                             },
                             {}};
        k["augment.plain"] = real_key([](RunConfig& c) -> double& { return c.train.augment.plain; });
        k["augment.splice_one"] = real_key([](RunConfig& c) -> double& { return c.train.augment.splice_one; });
        k["augment.freeze"] = real_key([](RunConfig& c) -> double& { return c.train.augment.freeze; });
        k["sampler.steps"] = size_key([](RunConfig& c) -> std::size_t& { return c.sampler.steps; });
        k["sampler.cfg_scale"] = real_key([](RunConfig& c) -> double& { return c.sampler.cfg_scale; });
        k["ecr.inner"] = real_key([](RunConfig& c) -> double& { return c.ecr.inner; });
        k["ecr.outer"] = real_key([](RunConfig& c) -> double& { return c.ecr.outer; });
        k["ecr.keep_fraction"] = real_key([](RunConfig& c) -> double& { return c.ecr.keep_fraction; });
        k["ecr.preset"] = {[](RunConfig& c, const ConfigEntry& e, const std::string& s) {
                               if (e.value != "standard") {
                                   throw ConfigError(s, e.line,
                                                     "unknown ECR preset '" + e.value + "' (expected standard)");
                               }
                               c.ecr = metrics::EcrThresholds::standard();
                           },
                           {}};
        k["scene.background"] = real_key([](RunConfig& c) -> double& { return c.scene.background; });
        k["scene.peak"] = real_key([](RunConfig& c) -> double& { return c.scene.peak; });
        k["scene.min_radius"] = real_key([](RunConfig& c) -> double& { return c.scene.min_radius; });
        k["scene.max_radius"] = real_key([](RunConfig& c) -> double& { return c.scene.max_radius; });
        k["scene.second_blob"] = real_key([](RunConfig& c) -> double& { return c.scene.second_blob; });
        k["data.count"] = size_key([](RunConfig& c) -> std::size_t& { return c.dataset_size; });
        k["data.kinds"] = {[](RunConfig& c, const ConfigEntry& e, const std::string& s) {
                               std::vector<synth::EffectKind> kinds;
                               std::string_view rest = e.value;
                               while (!rest.empty()) {
                                   auto comma = rest.find(',');
                                   auto name = trim(rest.substr(0, comma));
                                   try {
                                       kinds.push_back(synth::parse_effect(name));
                                   } catch (const Error& err) {
                                       throw ConfigError(s, e.line, err.what());
                                   }
                                   rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
                               }
                               if (kinds.empty()) {
                                   throw ConfigError(s, e.line, "'data.kinds' needs at least one effect");
                               }
                               c.kinds = std::move(kinds);
                           },
                           [](const RunConfig& c) {
                               std::string out;
                               for (auto k : c.kinds) {
                                   out += (out.empty() ? "" : ",") + std::string(synth::effect_name(k));
                               }
                               return out;
                           }};
        k["eval.jobs"] = size_key([](RunConfig& c) -> std::size_t& { return c.eval_jobs; });
        k["judge.timeout"] = real_key([](RunConfig& c) -> double& { return c.judge_timeout; });
        return k;
    }();
    return table;
}

void sync_scene(RunConfig& c) {
    c.scene.frames = c.model.frames;
    c.scene.height = c.model.height;
    c.scene.width = c.model.width;
    c.scene.channels = c.model.channels;
}

} // namespace

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& message)
    : Error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

std::vector<ConfigEntry> parse_config(std::string_view text, const std::string& source) {
    std::vector<ConfigEntry> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(source, line_no, "expected 'key = value', got '" + std::string(line) + "'");
        }
        ConfigEntry e{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
        if (e.key.empty()) {
            throw ConfigError(source, line_no, "missing key before '='");
        }
        if (e.value.empty()) {
            throw ConfigError(source, line_no, "missing value for '" + e.key + "'");
        }
        out.push_back(std::move(e));
    }
    return out;
}

void RunConfig::validate() const {
    model.validate();
    train.validate();
    sampler.validate();
    scene.validate();
    if (kinds.empty()) {
        throw Error("config: no effect kinds");
    }
    if (eval_jobs < 1) {
        throw Error("config: eval.jobs must be at least 1");
    }
    if (model.vocab < synth::kAllEffects.size()) {
        throw Error("config: model.vocab must cover all " + std::to_string(synth::kAllEffects.size()) + " effects");
    }
}

RunConfig preset(std::string_view name) {
    RunConfig c;
    if (name == "toy") {
        c.model = model::ModelConfig::toy();
        c.train = train::TrainConfig::desk();
        c.sampler.steps = 20;
        c.sampler.cfg_scale = 6.0;
    } else if (name == "paper-51-2") {
        c.model = model::ModelConfig::toy();
        c.model.moe = moe::MoEConfig::large();
        c.train = train::TrainConfig::full_schedule();
        c.sampler.steps = 50;
        c.sampler.cfg_scale = 6.0;
    } else {
        throw Error("unknown preset '" + std::string(name) + "' (expected toy or paper-51-2)");
    }
    sync_scene(c);
    return c;
}

void apply_config(RunConfig& config, const std::vector<ConfigEntry>& entries, const std::string& source) {
    const auto& table = keys();
    for (const auto& e : entries) {
        auto it = table.find(e.key);
        if (it == table.end()) {
            throw ConfigError(source, e.line, "unknown key '" + e.key + "'");
        }
        it->second.set(config, e, source);
    }
    sync_scene(config);
}

std::string to_config_text(const RunConfig& config) {
    std::string out;
    for (const auto& [name, key] : keys()) {
        if (key.get) {
            out += name + " = " + key.get(config) + "\n";
        }
    }
    return out;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open config file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    apply_config(base, parse_config(buffer.str(), path), path);
    return base;
}

} // namespace omnifx::io
