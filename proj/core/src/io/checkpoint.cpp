// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/io/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "omnifx/error.hpp"

namespace omnifx::io {

namespace {

constexpr char kMagic[4] = {'O', 'F', 'X', '1'};

template <typename T>
void put(std::string& out, T value) {
    auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bits.begin(), bits.end());
    }
    out.append(reinterpret_cast<const char*>(bits.data()), bits.size());
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        std::array<unsigned char, sizeof(T)> bits;
        std::memcpy(bits.data(), bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(bits.begin(), bits.end());
        }
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }

    std::string_view take(std::size_t n, const char* what) {
        need(n, what);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool done() const { return pos_ == bytes_.size(); }
    std::size_t offset() const { return pos_; }

private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw FormatError("checkpoint truncated while reading " + std::string(what) + " at byte " +
                              std::to_string(pos_));
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string encode_checkpoint(const Checkpoint& checkpoint) {
    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, checkpoint.config.size());
    out += checkpoint.config;
    put<std::uint64_t>(out, checkpoint.tensors.size());
    for (const auto& [name, tensor] : checkpoint.tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t extent : tensor.shape()) {
            put<std::uint64_t>(out, extent);
        }
        for (double v : tensor.values()) {
            put<double>(out, v);
        }
    }
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    Reader in(bytes);
    if (in.take(4, "magic") != std::string_view(kMagic, 4)) {
        throw FormatError("not a checkpoint: bad magic");
    }
    auto version = in.get<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (this build reads " +
                          std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint cp;
    auto config_len = in.get<std::uint64_t>("config length");
    cp.config = std::string(in.take(config_len, "config text"));
    auto count = in.get<std::uint64_t>("tensor count");
    for (std::uint64_t i = 0; i < count; ++i) {
        auto name_len = in.get<std::uint32_t>("tensor name length");
        std::string name(in.take(name_len, "tensor name"));
        auto rank = in.get<std::uint32_t>("tensor rank");
        numerics::Shape shape;
        for (std::uint32_t r = 0; r < rank; ++r) {
            shape.push_back(in.get<std::uint64_t>("tensor extent"));
        }
        std::size_t n = numerics::element_count(shape);
        if (n > (bytes.size() - in.offset()) / sizeof(double)) {
            throw FormatError("checkpoint truncated in payload of '" + name + "' at byte " +
                              std::to_string(in.offset()));
        }
        std::vector<double> data(n);
        for (auto& v : data) {
            v = in.get<double>("tensor payload");
        }
        if (!cp.tensors.emplace(name, numerics::Tensor(std::move(shape), std::move(data))).second) {
            throw FormatError("duplicate tensor '" + name + "' in checkpoint");
        }
    }
    if (!in.done()) {
        throw FormatError("trailing bytes after checkpoint at byte " + std::to_string(in.offset()));
    }
    return cp;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write checkpoint '" + path + "'");
    }
    auto bytes = encode_checkpoint(checkpoint);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("failed writing checkpoint '" + path + "'");
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open checkpoint '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return decode_checkpoint(buffer.str());
}

} // namespace omnifx::io
