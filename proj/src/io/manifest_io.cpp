// SPDX-License-Identifier: Apache-2.0
#include "occlukit/manifest.hpp"

#include <cstdlib>
#include <set>

#include <fmt/core.h>

#include "occlukit/io.hpp"

namespace occlukit::io {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key, std::string_view ctx) {
    if (!j.is_object() || !j.contains(key)) {
        throw DataError(fmt::format("{}: missing required field '{}'", ctx, key));
    }
    return j.at(key);
}

template <typename T>
T get_as(const json& j, const char* key, std::string_view ctx) {
    const json& v = field(j, key, ctx);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw DataError(fmt::format("{}: field '{}' has the wrong type", ctx, key));
    }
}

}  // namespace

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

double round_sig9(double v) {
    if (!std::isfinite(v) || v == 0.0) return v;
    return std::strtod(fmt::format("{:.9g}", v).c_str(), nullptr);
}

json intrinsics_to_json(const camera::CameraIntrinsics& K) {
    return json{{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx},
                {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}

camera::CameraIntrinsics intrinsics_from_json(const json& j) {
    constexpr std::string_view ctx = "intrinsics";
    camera::CameraIntrinsics K;
    K.fx = get_as<double>(j, "fx", ctx);
    K.fy = get_as<double>(j, "fy", ctx);
    K.cx = get_as<double>(j, "cx", ctx);
    K.cy = get_as<double>(j, "cy", ctx);
    K.width = get_as<int>(j, "width", ctx);
    K.height = get_as<int>(j, "height", ctx);
    try {
        K.validate();
    } catch (const ArgumentError& e) {
        throw DataError(e.what());
    }
    return K;
}

camera::CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
    try {
        return intrinsics_from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_intrinsics(const camera::CameraIntrinsics& K, const std::filesystem::path& path) {
    write_file(path, canonical_dump(intrinsics_to_json(K)));
}

json record_to_json(const DatasetRecord& r) {
    json cam = intrinsics_to_json(r.camera.intrinsics);
    if (r.camera.elevation_deg) cam["elevation_deg"] = *r.camera.elevation_deg;
    if (r.camera.distance) cam["distance"] = *r.camera.distance;
    return json{{"record_id", r.record_id},
                {"object_id", r.object_id},
                {"category", r.category},
                {"focal_mm", r.focal_mm},
                {"camera", std::move(cam)},
                {"depth_path", r.depth_path},
                {"mask_path", r.mask_path},
                {"image_path", r.image_path},
                {"attempts", r.attempts},
                {"prompts", json{{"object", r.prompts.object}, {"scene", r.prompts.scene}}}};
}

DatasetRecord record_from_json(const json& j) {
    const std::string ctx = j.is_object() && j.contains("record_id") && j["record_id"].is_string()
                                    ? fmt::format("record '{}'", j["record_id"].get<std::string>())
                                    : std::string("record");
    DatasetRecord r;
    r.record_id = get_as<std::string>(j, "record_id", ctx);
    r.object_id = get_as<std::string>(j, "object_id", ctx);
    r.category = get_as<std::string>(j, "category", ctx);
    if (r.category.empty()) throw DataError(fmt::format("{}: empty category", ctx));
    r.focal_mm = get_as<double>(j, "focal_mm", ctx);
    const json& cam = field(j, "camera", ctx);
    r.camera.intrinsics = intrinsics_from_json(cam);
    if (cam.contains("elevation_deg")) r.camera.elevation_deg = get_as<double>(cam, "elevation_deg", ctx);
    if (cam.contains("distance")) r.camera.distance = get_as<double>(cam, "distance", ctx);
    r.depth_path = get_as<std::string>(j, "depth_path", ctx);
    r.mask_path = get_as<std::string>(j, "mask_path", ctx);
    r.image_path = get_as<std::string>(j, "image_path", ctx);
    if (j.contains("attempts")) r.attempts = get_as<std::uint32_t>(j, "attempts", ctx);
    if (j.contains("prompts")) {
        const json& p = j.at("prompts");
        r.prompts.object = get_as<std::string>(p, "object", ctx);
        r.prompts.scene = get_as<std::string>(p, "scene", ctx);
    }
    return r;
}

std::string serialize_manifest(const SynthManifest& m) {
    json records = json::array();
    for (const auto& r : m.records) records.push_back(record_to_json(r));
    return canonical_dump(json{{"seed", m.seed},
                               {"pipeline_config_hash", m.pipeline_config_hash},
                               {"records", std::move(records)}});
}

SynthManifest parse_manifest(std::string_view text, std::string_view name) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(fmt::format("{}: {}", name, e.what()));
    }
    SynthManifest m;
    m.seed = get_as<std::uint64_t>(j, "seed", name);
    m.pipeline_config_hash = get_as<std::string>(j, "pipeline_config_hash", name);
    const json& records = field(j, "records", name);
    if (!records.is_array()) throw DataError(fmt::format("{}: 'records' must be an array", name));
    std::set<std::string> seen;
    for (const auto& rj : records) {
        auto r = record_from_json(rj);
        if (!seen.insert(r.record_id).second) {
            throw DataError(fmt::format("{}: duplicate record ID '{}'", name, r.record_id));
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

SynthManifest read_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_file(path), path.string());
}

void write_manifest(const SynthManifest& m, const std::filesystem::path& path, bool check_paths) {
    std::set<std::string> seen;
    const auto base = path.parent_path();
    for (const auto& r : m.records) {
        if (!seen.insert(r.record_id).second) {
            throw DataError(fmt::format("duplicate record ID '{}'", r.record_id));
        }
        if (!check_paths) continue;
        for (const auto* p : {&r.depth_path, &r.mask_path, &r.image_path}) {
            std::filesystem::path fp(*p);
            if (fp.is_relative()) fp = base / fp;
            if (!std::filesystem::exists(fp)) {
                throw DataError(fmt::format("record '{}' references missing file '{}'", r.record_id,
                                            fp.string()));
            }
        }
    }
    write_file(path, serialize_manifest(m));
}

}  // namespace occlukit::io
