// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "omnifx/synthvfx.hpp"

namespace omnifx::io {

struct ManifestEntry {
    std::string id;
    std::vector<std::string> effects;
    std::vector<std::string> masks;  // relative to the root
    std::vector<std::string> frames; // relative to the root
    std::string provenance = "plain";

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
    std::string root;
    std::vector<ManifestEntry> records;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string manifest_to_json(const Manifest& manifest);
/// Parses and checks structure; `root` is taken from `root_dir` when given.
Manifest manifest_from_json(std::string_view text, const std::string& root_dir = {});

/// Writes frames, masks and `manifest.json` under `root`.
Manifest write_dataset(const std::string& root, std::span<const synth::SampleRecord> records,
                       const std::string& id_prefix = "r");
/// Reads `<root>/manifest.json` and verifies that every referenced file exists.
Manifest read_manifest(const std::string& path);
synth::SampleRecord load_record(const Manifest& manifest, std::size_t index);

} // namespace omnifx::io
