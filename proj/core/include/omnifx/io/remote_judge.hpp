// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include "omnifx/judge.hpp"

namespace omnifx::io {

/// Row-major runs of alternating cells, starting with a run of zeros:
/// "<height>x<width>:z,o,z,o,..."
std::string mask_rle(const Mask& mask);
Mask parse_mask_rle(std::string_view text);

/// Plain-text query: effect, extents, mask RLE, then one base64 P5 frame per line.
std::string judge_request_body(const Video& video, synth::EffectKind effect, const Mask& mask);

/// Exactly {"answer":"yes"} or {"answer":"no"}; anything else is empty.
std::optional<bool> parse_judge_response(std::string_view body);

struct RemoteJudgeConfig {
    std::string endpoint; // http://host:port/path
    double timeout_seconds = 10.0;
    int retries = 2;
    int backoff_ms = 200;
};

/// One HTTP POST per vote, retried with doubling backoff; exhausted retries
/// yield an error vote.
class RemoteJudge final : public metrics::Judge {
public:
    explicit RemoteJudge(RemoteJudgeConfig config);
    metrics::Vote ask(const Video& video, synth::EffectKind effect, const Mask& mask) override;

private:
    RemoteJudgeConfig config_;
    std::string base_;
    std::string path_;
};

} // namespace omnifx::io
