// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "omnifx/diffusion.hpp"
#include "omnifx/error.hpp"
#include "omnifx/metrics.hpp"
#include "omnifx/model.hpp"
#include "omnifx/synthvfx.hpp"
#include "omnifx/trainer.hpp"

namespace omnifx::io {

/// Malformed configuration, tagged with its source and 1-based line.
class ConfigError : public Error {
public:
    ConfigError(const std::string& source, std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// `key = value` lines; `#` starts a comment, blank lines are ignored.
std::vector<ConfigEntry> parse_config(std::string_view text, const std::string& source = "<config>");

struct RunConfig {
    model::ModelConfig model;
    train::TrainConfig train = train::TrainConfig::desk();
    diffusion::SamplerConfig sampler;
    metrics::EcrThresholds ecr = metrics::EcrThresholds::standard();
    synth::SceneConfig scene;
    std::size_t dataset_size = 64;
    std::vector<synth::EffectKind> kinds{synth::kAllEffects.begin(), synth::kAllEffects.end()};
    std::size_t eval_jobs = 4;
    double judge_timeout = 10.0;

    void validate() const;
};

/// "toy" or "paper-51-2".
RunConfig preset(std::string_view name);

/// Overlays entries in order. Unknown keys and bad values raise ConfigError.
void apply_config(RunConfig& config, const std::vector<ConfigEntry>& entries, const std::string& source = "<config>");

/// Round-trippable text form of every key.
std::string to_config_text(const RunConfig& config);

RunConfig load_config_file(const std::string& path, RunConfig base);

} // namespace omnifx::io
