// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace omnifx::testing {

/// Token kinds listed independently of the library's layout code.
struct OracleToken {
    int condition = -1; // -1 for latent
    bool text = false;
};

inline std::vector<OracleToken> oracle_tokens(std::size_t n, std::size_t text_len, std::size_t spatial_len,
                                              std::size_t latent_len) {
    std::vector<OracleToken> out;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < text_len; ++i) {
            out.push_back({static_cast<int>(k), true});
        }
        for (std::size_t i = 0; i < spatial_len; ++i) {
            out.push_back({static_cast<int>(k), false});
        }
    }
    for (std::size_t i = 0; i < latent_len; ++i) {
        out.push_back({-1, false});
    }
    return out;
}

/// 0 when x_i and x_j share a condition pair, or when x_i is latent and x_j
/// is latent or any text token; blocked otherwise.
inline bool oracle_attendable(const OracleToken& i, const OracleToken& j) {
    if (i.condition >= 0 && i.condition == j.condition) {
        return true;
    }
    if (i.condition < 0 && (j.condition < 0 || j.text)) {
        return true;
    }
    return false;
}

} // namespace omnifx::testing
