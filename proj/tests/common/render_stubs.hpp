// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occlukit/io.hpp"
#include "occlukit/manifest.hpp"
#include "occlukit/rng.hpp"

namespace occlukit::test {

/// Writes depth/mask/image for a random ellipse "render" and returns its record
/// with absolute paths. Depth is positive exactly on the mask.
inline io::DatasetRecord write_render_stub(const std::filesystem::path& dir, const std::string& id,
                                           std::uint64_t seed, int width = 48, int height = 40) {
    Rng rng(seed);
    const double cx = rng.uniform(0.35, 0.65) * width, cy = rng.uniform(0.35, 0.65) * height;
    const double rx = rng.uniform(0.15, 0.3) * width, ry = rng.uniform(0.15, 0.3) * height;
    FloatRaster depth(width, height);
    Mask mask(width, height);
    Image image(width, height, 3, 255);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double u = (x - cx) / rx, v = (y - cy) / ry;
            const double r2 = u * u + v * v;
            if (r2 > 1.0) continue;
            mask.set(x, y, true);
            depth.at(x, y) = static_cast<float>(2.0 - 0.5 * std::sqrt(1.0 - r2));
            const auto shade = static_cast<std::uint8_t>(90 + 60 * r2);
            std::fill_n(image.pixel(x, y), 3, shade);
        }
    }
    io::DatasetRecord r;
    r.record_id = id;
    r.object_id = "obj_" + id;
    r.category = seed % 2 ? "chair" : "table";
    r.focal_mm = 30.0 + static_cast<double>(seed % 41);
    r.camera.intrinsics = {1.2 * width, 1.2 * width, width / 2.0, height / 2.0, width, height};
    r.camera.elevation_deg = 5.0 + static_cast<double>(seed % 61);
    r.camera.distance = 2.0;
    r.depth_path = (dir / ("depth_" + id + ".pfm")).string();
    r.mask_path = (dir / ("mask_" + id + ".pgm")).string();
    r.image_path = (dir / ("image_" + id + ".png")).string();
    io::write_pfm(depth, r.depth_path);
    io::write_mask_pgm(mask, r.mask_path);
    io::write_image(image, r.image_path);
    return r;
}

inline std::vector<io::DatasetRecord> write_render_stubs(const std::filesystem::path& dir, int count,
                                                         std::uint64_t seed = 0) {
    std::vector<io::DatasetRecord> out;
    for (int k = 0; k < count; ++k) {
        char id[16];
        std::snprintf(id, sizeof id, "r%03d", k);
        out.push_back(write_render_stub(dir, id, seed * 1000 + static_cast<std::uint64_t>(k)));
    }
    return out;
}

inline void write_renders_file(const std::vector<io::DatasetRecord>& renders, const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : renders) arr.push_back(io::record_to_json(r));
    io::write_file(path, arr.dump(2));
}

}  // namespace occlukit::test
