// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "omnifx/model.hpp"

namespace omnifx::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::string config; // key = value snapshot
    model::ParameterSet tensors;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// "OFX1", u32 version, u64-prefixed config text, u64 tensor count, then per
/// tensor: u32-prefixed name, u32 rank, u64 extents, little-endian f64 data.
std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

} // namespace omnifx::io
