// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/io/manifest.hpp"

#include <cstdio>
#include <filesystem>

#include "json.hpp"
#include "omnifx/error.hpp"
#include "omnifx/io/frame_io.hpp"

namespace omnifx::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string manifest_to_json(const Manifest& manifest) {
    json records = json::array();
    for (const auto& r : manifest.records) {
        records.push_back({{"id", r.id},
                           {"effects", r.effects},
                           {"masks", r.masks},
                           {"frames", r.frames},
                           {"provenance", r.provenance}});
    }
    json doc = {{"format", "omnifx-manifest"}, {"version", 1}, {"records", records}};
    return doc.dump(2) + "\n";
}

Manifest manifest_from_json(std::string_view text, const std::string& root_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
    }
    Manifest m;
    m.root = root_dir;
    try {
        if (doc.at("format") != "omnifx-manifest" || doc.at("version") != 1) {
            throw FormatError("unsupported manifest format or version");
        }
        for (const auto& r : doc.at("records")) {
            ManifestEntry e;
            e.id = r.at("id").get<std::string>();
            e.effects = r.at("effects").get<std::vector<std::string>>();
            e.masks = r.at("masks").get<std::vector<std::string>>();
            e.frames = r.at("frames").get<std::vector<std::string>>();
            e.provenance = r.at("provenance").get<std::string>();
            if (e.effects.size() != e.masks.size()) {
                throw FormatError("record '" + e.id + "' lists " + std::to_string(e.effects.size()) + " effects but " +
                                  std::to_string(e.masks.size()) + " masks");
            }
            if (e.frames.empty()) {
                throw FormatError("record '" + e.id + "' has no frames");
            }
            m.records.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
    if (!m.records.empty()) {
        std::size_t frames = m.records.front().frames.size();
        for (const auto& r : m.records) {
            if (r.frames.size() != frames) {
                throw FormatError("record '" + r.id + "' has " + std::to_string(r.frames.size()) +
                                  " frames, expected " + std::to_string(frames));
            }
        }
    }
    return m;
}

Manifest write_dataset(const std::string& root, std::span<const synth::SampleRecord> records,
                       const std::string& id_prefix) {
    fs::create_directories(fs::path(root) / "frames");
    fs::create_directories(fs::path(root) / "masks");
    Manifest m;
    m.root = root;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        char id[64];
        std::snprintf(id, sizeof(id), "%s%04zu", id_prefix.c_str(), i);
        ManifestEntry e;
        e.id = id;
        e.provenance = rec.provenance.tag();
        for (const auto& path : save_video(rec.target, (fs::path(root) / "frames").string(), e.id)) {
            e.frames.push_back(fs::relative(path, root).generic_string());
        }
        for (std::size_t c = 0; c < rec.conditions.size(); ++c) {
            auto rel = fs::path("masks") / (e.id + "_c" + std::to_string(c) + ".pgm");
            save_mask(rec.conditions[c].mask, (fs::path(root) / rel).string());
            e.masks.push_back(rel.generic_string());
            e.effects.emplace_back(synth::effect_name(synth::effect_from_id(rec.conditions[c].effect_id)));
        }
        m.records.push_back(std::move(e));
    }
    write_file((fs::path(root) / "manifest.json").string(), manifest_to_json(m));
    return m;
}

Manifest read_manifest(const std::string& path) {
    fs::path p(path);
    if (fs::is_directory(p)) {
        p /= "manifest.json";
    }
    Manifest m = manifest_from_json(read_file(p.string()), p.parent_path().string());
    for (const auto& r : m.records) {
        for (const auto* list : {&r.frames, &r.masks}) {
            for (const auto& rel : *list) {
                if (!fs::exists(fs::path(m.root) / rel)) {
                    throw FormatError("record '" + r.id + "' references missing file '" + rel + "'");
                }
            }
        }
    }
    return m;
}

synth::SampleRecord load_record(const Manifest& manifest, std::size_t index) {
    const ManifestEntry& e = manifest.records.at(index);
    std::vector<std::string> paths;
    for (const auto& rel : e.frames) {
        paths.push_back((fs::path(manifest.root) / rel).string());
    }
    synth::SampleRecord rec;
    rec.target = load_video(paths);
    rec.reference = rec.target.frame(0);
    for (std::size_t c = 0; c < e.effects.size(); ++c) {
        Mask mask = load_mask((fs::path(manifest.root) / e.masks[c]).string());
        if (mask.height() != rec.target.height() || mask.width() != rec.target.width()) {
            throw ShapeError("record '" + e.id + "': mask extents differ from its frames");
        }
        rec.conditions.push_back({synth::effect_id(synth::parse_effect(e.effects[c])), std::move(mask)});
    }
    rec.provenance = synth::Provenance::parse(e.provenance);
    return rec;
}

} // namespace omnifx::io
