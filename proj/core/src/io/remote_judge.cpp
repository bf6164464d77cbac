// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/io/remote_judge.hpp"

#include <chrono>
#include <charconv>
#include <thread>

#include "httplib.h"
#include "omnifx/error.hpp"
#include "omnifx/io/frame_io.hpp"

namespace omnifx::io {

std::string mask_rle(const Mask& mask) {
    std::string out = std::to_string(mask.height()) + "x" + std::to_string(mask.width()) + ":";
    std::uint8_t current = 0;
    std::size_t run = 0;
    bool first = true;
    auto flush = [&] {
        out += (first ? "" : ",") + std::to_string(run);
        first = false;
    };
    for (std::uint8_t cell : mask.cells()) {
        if (cell != current) {
            flush();
            current = cell;
            run = 0;
        }
        ++run;
    }
    flush();
    return out;
}

Mask parse_mask_rle(std::string_view text) {
    auto fail = [&] { return FormatError("malformed mask run-length code '" + std::string(text) + "'"); };
    auto x = text.find('x');
    auto colon = text.find(':');
    if (x == std::string_view::npos || colon == std::string_view::npos || x > colon) {
        throw fail();
    }
    auto number = [&](std::string_view s) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw fail();
        }
        return v;
    };
    std::size_t h = number(text.substr(0, x));
    std::size_t w = number(text.substr(x + 1, colon - x - 1));
    Mask m(h, w);
    std::size_t pos = 0;
    bool on = false;
    std::string_view rest = text.substr(colon + 1);
    while (true) {
        auto comma = rest.find(',');
        std::size_t run = number(rest.substr(0, comma));
        if (pos + run > h * w) {
            throw fail();
        }
        for (std::size_t i = 0; i < run; ++i, ++pos) {
            m.set(pos / w, pos % w, on);
        }
        on = !on;
        if (comma == std::string_view::npos) {
            break;
        }
        rest = rest.substr(comma + 1);
    }
    if (pos != h * w) {
        throw fail();
    }
    return m;
}

std::string judge_request_body(const Video& video, synth::EffectKind effect, const Mask& mask) {
    std::string body;
    body += "effect: " + std::string(synth::effect_name(effect)) + "\n";
    body += "frames: " + std::to_string(video.frames()) + "\n";
    body += "height: " + std::to_string(video.height()) + "\n";
    body += "width: " + std::to_string(video.width()) + "\n";
    body += "mask: " + mask_rle(mask) + "\n";
    for (std::size_t f = 0; f < video.frames(); ++f) {
        body += "frame: " +
                httplib::detail::base64_encode(encode_pgm(video.luminance(f), video.height(), video.width())) + "\n";
    }
    return body;
}

std::optional<bool> parse_judge_response(std::string_view body) {
    if (body == R"({"answer":"yes"})") {
        return true;
    }
    if (body == R"({"answer":"no"})") {
        return false;
    }
    return std::nullopt;
}

RemoteJudge::RemoteJudge(RemoteJudgeConfig config) : config_(std::move(config)) {
    const std::string& url = config_.endpoint;
    auto scheme = url.find("://");
    if (scheme == std::string::npos || url.substr(0, scheme) != "http") {
        throw Error("remote judge endpoint must be an http:// URL, got '" + url + "'");
    }
    auto slash = url.find('/', scheme + 3);
    base_ = url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

metrics::Vote RemoteJudge::ask(const Video& video, synth::EffectKind effect, const Mask& mask) {
    const std::string body = judge_request_body(video, effect, mask);
    httplib::Client client(base_);
    auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(micros);
    client.set_read_timeout(micros);
    client.set_write_timeout(micros);

    int delay = config_.backoff_ms;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            delay *= 2;
        }
        auto res = client.Post(path_, body, "text/plain");
        if (res && res->status == 200) {
            if (auto answer = parse_judge_response(res->body)) {
                return *answer ? metrics::Vote::Yes : metrics::Vote::No;
            }
        }
    }
    return metrics::Vote::Error;
}

} // namespace omnifx::io
