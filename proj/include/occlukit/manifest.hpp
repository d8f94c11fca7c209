// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occlukit/camera.hpp"

namespace occlukit::io {

/// Camera of one rendering: intrinsics plus the pose metadata the renderer
/// reported.
struct CameraRecord {
    camera::CameraIntrinsics intrinsics;
    std::optional<double> elevation_deg;
    std::optional<double> distance;

    bool operator==(const CameraRecord&) const = default;
};

struct Prompts {
    std::string object;
    std::string scene;

    bool operator==(const Prompts&) const = default;
};

/// One <object, camera, depth, mask, image> tuple. Render stubs fed to the
/// synthesis pipeline use the same shape with attempts = 0 and empty prompts.
struct DatasetRecord {
    std::string record_id;
    std::string object_id;
    std::string category;
    double focal_mm = 50.0;
    CameraRecord camera;
    std::string depth_path;
    std::string mask_path;
    std::string image_path;
    std::uint32_t attempts = 0;
    Prompts prompts;

    bool operator==(const DatasetRecord&) const = default;
};

struct SynthManifest {
    std::uint64_t seed = 0;
    std::string pipeline_config_hash;
    std::vector<DatasetRecord> records;

    bool operator==(const SynthManifest&) const = default;
};

nlohmann::json intrinsics_to_json(const camera::CameraIntrinsics& K);
camera::CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);
camera::CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const camera::CameraIntrinsics& K, const std::filesystem::path& path);

nlohmann::json record_to_json(const DatasetRecord& r);
/// Throws DataError naming the first missing or mistyped field.
DatasetRecord record_from_json(const nlohmann::json& j);

/// Canonical text: sorted keys, two-space indent, shortest round-trip floats,
/// trailing newline.
std::string serialize_manifest(const SynthManifest& m);
/// Throws DataError on missing fields or a duplicate record ID.
SynthManifest parse_manifest(std::string_view text, std::string_view name = "<memory>");

SynthManifest read_manifest(const std::filesystem::path& path);

/// Relative record paths are resolved against the manifest's directory; when
/// check_paths is set, a missing file aborts the write.
void write_manifest(const SynthManifest& m, const std::filesystem::path& path,
                    bool check_paths = true);

/// Serializes JSON canonically (sorted keys, indent 2, trailing newline).
std::string canonical_dump(const nlohmann::json& j);

/// Rounds to 9 significant digits so reports print compactly and stably.
double round_sig9(double v);

}  // namespace occlukit::io
