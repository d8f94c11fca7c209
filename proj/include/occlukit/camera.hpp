// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Core>

#include "occlukit/raster.hpp"
#include "occlukit/types.hpp"

/// Pinhole intrinsics, depth unprojection into a pixel-aligned visible shape,
/// and point normalization.
///
/// Pixel convention: column index i is x, row index j is y, and pixel centers
/// sit on integer coordinates (no half-pixel offset).
namespace occlukit::camera {

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    [[nodiscard]] Mat3 matrix() const;
    /// Throws ArgumentError when any invariant fails.
    void validate() const;

    bool operator==(const CameraIntrinsics&) const = default;
};

/// Network-side parameterization: one focal scale and principal-point shifts
/// expressed as fractions of the image size.
struct IntrinsicsParams {
    double focal_scale = 1.0;
    double pp_shift_x = 0.0;
    double pp_shift_y = 0.0;
};

CameraIntrinsics build_intrinsics(const IntrinsicsParams& params, int width, int height,
                                  double base_focal);
/// base_focal defaults to the image width.
CameraIntrinsics build_intrinsics(const IntrinsicsParams& params, int width, int height);

struct UnprojectConfig {
    double eta = 0.5;
};

/// Pixel-aligned 3D points. Invalid pixels hold exactly (0,0,0).
struct PointMap {
    int width = 0;
    int height = 0;
    std::vector<Vec3> points;
    Mask valid;

    [[nodiscard]] const Vec3& at(int x, int y) const {
        return points[static_cast<std::size_t>(y) * width + x];
    }
    /// The valid points in row-major order.
    [[nodiscard]] PointCloud valid_points() const;
};

/// Per pixel: soft_mask >= eta gives depth * K^-1 [i, j, 1]^T, else zero.
PointMap unproject(const FloatRaster& depth, const FloatRaster& soft_mask,
                   const CameraIntrinsics& K, const UnprojectConfig& cfg = {});

/// Same as above with an already-binary mask.
PointMap unproject(const FloatRaster& depth, const Mask& mask, const CameraIntrinsics& K);

/// (u, v) = (fx x / z + cx, fy y / z + cy). Throws DataError on z <= 0.
std::vector<Eigen::Vector2d> project(const PointCloud& cloud, const CameraIntrinsics& K);
/// Projects the valid pixels only, in row-major order.
std::vector<Eigen::Vector2d> project(const PointMap& pm, const CameraIntrinsics& K);

enum class ScaleConvention {
    kUnitBall,  ///< max distance from centroid = 1
    kUnitRms,   ///< root-mean-square distance from centroid = 1
    kUnitBox,   ///< largest bounding-box half-extent = 1
};

struct NormalizationTransform {
    Vec3 centroid = Vec3::Zero();
    double scale = 1.0;

    [[nodiscard]] Vec3 apply(const Vec3& p) const { return (p - centroid) / scale; }
    [[nodiscard]] Vec3 invert(const Vec3& q) const { return q * scale + centroid; }
};

/// Zero-mean, unit-scale normalization. Throws DataError on an empty input or
/// when all points coincide.
std::pair<PointCloud, NormalizationTransform> normalize_points(
        const PointCloud& cloud, ScaleConvention convention = ScaleConvention::kUnitBall);

/// Only valid pixels contribute and move; invalid pixels stay (0,0,0).
std::pair<PointMap, NormalizationTransform> normalize_points(
        const PointMap& pm, ScaleConvention convention = ScaleConvention::kUnitBall);

PointCloud denormalize(const PointCloud& cloud, const NormalizationTransform& t);

}  // namespace occlukit::camera
