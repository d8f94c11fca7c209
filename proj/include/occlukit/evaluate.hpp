// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>

#include <nlohmann/json.hpp>

#include "occlukit/align.hpp"
#include "occlukit/geometry.hpp"
#include "occlukit/metrics.hpp"

/// Reconstruction evaluation in a fixed order: extract a mesh from occupancy,
/// sample the surface, align prediction onto ground truth with ICP, score.
namespace occlukit::eval {

using Shape = std::variant<geometry::OccupancyGrid, TriangleMesh, PointCloud>;

struct EvalConfig {
    metrics::MetricConfig metrics;
    bool icp = true;
    align::IcpConfig icp_config;
    std::size_t samples = geometry::kDefaultSurfaceSamples;
    double isolevel = 0.5;
    std::uint64_t seed = 0;
};

struct EvalResult {
    metrics::FScoreReport report;
    std::optional<align::IcpResult> icp;
    std::size_t pred_points = 0;
    std::size_t gt_points = 0;
};

/// Grids go through marching cubes then sampling, meshes are sampled, point
/// clouds are used as given.
PointCloud shape_points(const Shape& shape, const EvalConfig& cfg, std::uint64_t seed);

EvalResult evaluate(const Shape& pred, const Shape& gt, const EvalConfig& cfg = {});

/// By magic bytes: OCCGRID1 grid or PLY (mesh when it has faces).
Shape read_shape(const std::filesystem::path& path);

/// {"precision_<k>", "recall_<k>", "fs_<k>" per multiple, "chamfer"}, values
/// rounded to 9 significant digits.
nlohmann::json report_to_json(const metrics::FScoreReport& report);

}  // namespace occlukit::eval
