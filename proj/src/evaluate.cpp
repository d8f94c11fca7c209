// SPDX-License-Identifier: Apache-2.0
#include "occlukit/evaluate.hpp"

#include <fmt/core.h>

#include "occlukit/io.hpp"
#include "occlukit/manifest.hpp"
#include "occlukit/rng.hpp"

namespace occlukit::eval {

PointCloud shape_points(const Shape& shape, const EvalConfig& cfg, std::uint64_t seed) {
    if (const auto* cloud = std::get_if<PointCloud>(&shape)) {
        if (cloud->empty()) throw DataError("point cloud is empty");
        return *cloud;
    }
    TriangleMesh mesh;
    if (const auto* grid = std::get_if<geometry::OccupancyGrid>(&shape)) {
        mesh = geometry::marching_cubes(*grid, cfg.isolevel, cfg.metrics.workers);
    } else {
        mesh = std::get<TriangleMesh>(shape);
    }
    if (mesh.triangles.empty()) throw DataError("surface is empty; nothing to sample");
    return geometry::sample_surface(mesh, cfg.samples, seed);
}

EvalResult evaluate(const Shape& pred, const Shape& gt, const EvalConfig& cfg) {
    cfg.metrics.validate();
    EvalResult result;
    // One sampling seed for both sides: a shape compared with itself yields
    // identical samples and therefore a zero distance.
    PointCloud p = shape_points(pred, cfg, mix64(cfg.seed));
    const PointCloud g = shape_points(gt, cfg, mix64(cfg.seed));
    if (cfg.icp) {
        auto icp_cfg = cfg.icp_config;
        icp_cfg.workers = cfg.metrics.workers;
        result.icp = align::icp_align(p, g, icp_cfg);
        p = align::apply_transform(result.icp->transform, p);
    }
    result.pred_points = p.size();
    result.gt_points = g.size();
    result.report = metrics::f_score(p, g, cfg.metrics);
    return result;
}

Shape read_shape(const std::filesystem::path& path) {
    const std::string bytes = io::read_file(path);
    if (bytes.rfind("OCCGRID1", 0) == 0) return geometry::decode_grid(bytes, path.string());
    auto ply = io::decode_ply(bytes, path.string());
    if (auto* mesh = std::get_if<TriangleMesh>(&ply)) return std::move(*mesh);
    return std::get<PointCloud>(std::move(ply));
}

nlohmann::json report_to_json(const metrics::FScoreReport& report) {
    nlohmann::json j;
    for (const auto& s : report.scores) {
        j[fmt::format("precision_{}", s.multiple)] = io::round_sig9(s.precision);
        j[fmt::format("recall_{}", s.multiple)] = io::round_sig9(s.recall);
        j[fmt::format("fs_{}", s.multiple)] = io::round_sig9(s.fscore);
    }
    j["chamfer"] = io::round_sig9(report.chamfer);
    return j;
}

}  // namespace occlukit::eval
