// SPDX-License-Identifier: Apache-2.0
#include "occlukit/camera.hpp"

#include <cmath>

#include <fmt/core.h>

namespace occlukit::camera {

Mat3 CameraIntrinsics::matrix() const {
    Mat3 K;
    K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return K;
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
        throw ArgumentError(fmt::format("focal lengths must be positive, got fx={} fy={}", fx, fy));
    }
    if (width < 1 || height < 1) {
        throw ArgumentError(fmt::format("bad intrinsics resolution {}x{}", width, height));
    }
    if (!(cx >= 0.0 && cx <= width) || !(cy >= 0.0 && cy <= height)) {
        throw ArgumentError(fmt::format("principal point ({}, {}) outside the {}x{} image", cx, cy,
                                        width, height));
    }
}

CameraIntrinsics build_intrinsics(const IntrinsicsParams& params, int width, int height,
                                  double base_focal) {
    if (width < 1 || height < 1) {
        throw ArgumentError(fmt::format("bad resolution {}x{}", width, height));
    }
    if (!(base_focal > 0.0)) throw ArgumentError("base focal length must be positive");
    if (!(params.focal_scale > 0.0) || !std::isfinite(params.focal_scale)) {
        throw ArgumentError(fmt::format("focal scale must be positive, got {}", params.focal_scale));
    }
    if (std::abs(params.pp_shift_x) > 0.5 || std::abs(params.pp_shift_y) > 0.5) {
        throw ArgumentError("principal point shifts must lie in [-0.5, 0.5]");
    }
    CameraIntrinsics K;
    K.fx = K.fy = params.focal_scale * base_focal;
    K.cx = width / 2.0 + params.pp_shift_x * width;
    K.cy = height / 2.0 + params.pp_shift_y * height;
    K.width = width;
    K.height = height;
    return K;
}

CameraIntrinsics build_intrinsics(const IntrinsicsParams& params, int width, int height) {
    return build_intrinsics(params, width, height, static_cast<double>(width));
}

PointCloud PointMap::valid_points() const {
    PointCloud out;
    out.points.reserve(valid.count());
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (valid.bits[k]) out.points.push_back(points[k]);
    }
    return out;
}

PointMap unproject(const FloatRaster& depth, const Mask& mask, const CameraIntrinsics& K) {
    K.validate();
    if (depth.width != K.width || depth.height != K.height || mask.width != K.width ||
        mask.height != K.height) {
        throw DataError(fmt::format("resolution mismatch: depth {}x{}, mask {}x{}, intrinsics {}x{}",
                                    depth.width, depth.height, mask.width, mask.height, K.width,
                                    K.height));
    }
    PointMap pm;
    pm.width = K.width;
    pm.height = K.height;
    pm.points.assign(depth.size(), Vec3::Zero());
    pm.valid = mask;
    for (int j = 0; j < K.height; ++j) {
        for (int i = 0; i < K.width; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * K.width + i;
            if (!mask.bits[k]) continue;
            const double d = depth.data[k];
            if (!(d > 0.0)) {
                throw DataError(fmt::format("non-positive depth {} at pixel ({}, {}) inside mask", d,
                                            i, j));
            }
            // Evaluated as written, (i - cx) * d / fx, so scalar re-derivations
            // agree bit for bit.
            pm.points[k] = Vec3((i - K.cx) * d / K.fx, (j - K.cy) * d / K.fy, d);
        }
    }
    return pm;
}

PointMap unproject(const FloatRaster& depth, const FloatRaster& soft_mask,
                   const CameraIntrinsics& K, const UnprojectConfig& cfg) {
    if (soft_mask.width != depth.width || soft_mask.height != depth.height) {
        throw DataError(fmt::format("resolution mismatch: depth {}x{}, mask {}x{}", depth.width,
                                    depth.height, soft_mask.width, soft_mask.height));
    }
    Mask mask(soft_mask.width, soft_mask.height);
    for (std::size_t k = 0; k < mask.bits.size(); ++k) {
        mask.bits[k] = soft_mask.data[k] >= cfg.eta ? 1 : 0;
    }
    return unproject(depth, mask, K);
}

std::vector<Eigen::Vector2d> project(const PointCloud& cloud, const CameraIntrinsics& K) {
    std::vector<Eigen::Vector2d> uv;
    uv.reserve(cloud.size());
    for (std::size_t k = 0; k < cloud.size(); ++k) {
        const Vec3& p = cloud[k];
        if (!(p.z() > 0.0)) {
            throw DataError(fmt::format("point {} has non-positive depth z={}", k, p.z()));
        }
        uv.emplace_back(K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy);
    }
    return uv;
}

std::vector<Eigen::Vector2d> project(const PointMap& pm, const CameraIntrinsics& K) {
    return project(pm.valid_points(), K);
}

namespace {

template <typename Range>
NormalizationTransform fit_normalization(const Range& pts, std::size_t n,
                                         ScaleConvention convention) {
    if (n == 0) throw DataError("normalization needs at least one valid point");
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : pts) centroid += p;
    centroid /= static_cast<double>(n);

    double scale = 0.0;
    switch (convention) {
        case ScaleConvention::kUnitBall:
            for (const Vec3& p : pts) scale = std::max(scale, (p - centroid).norm());
            break;
        case ScaleConvention::kUnitRms: {
            double acc = 0.0;
            for (const Vec3& p : pts) acc += (p - centroid).squaredNorm();
            scale = std::sqrt(acc / static_cast<double>(n));
            break;
        }
        case ScaleConvention::kUnitBox: {
            Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
            Vec3 hi = -lo;
            for (const Vec3& p : pts) {
                lo = lo.cwiseMin(p);
                hi = hi.cwiseMax(p);
            }
            scale = 0.5 * (hi - lo).maxCoeff();
            break;
        }
    }
    if (!(scale > 0.0)) throw DataError("all points coincide; normalization scale is undefined");
    return {centroid, scale};
}

}  // namespace

std::pair<PointCloud, NormalizationTransform> normalize_points(const PointCloud& cloud,
                                                                ScaleConvention convention) {
    const auto t = fit_normalization(cloud.points, cloud.size(), convention);
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
    return {std::move(out), t};
}

std::pair<PointMap, NormalizationTransform> normalize_points(const PointMap& pm,
                                                              ScaleConvention convention) {
    const PointCloud valid = pm.valid_points();
    const auto t = fit_normalization(valid.points, valid.size(), convention);
    PointMap out = pm;
    for (std::size_t k = 0; k < out.points.size(); ++k) {
        if (out.valid.bits[k]) out.points[k] = t.apply(out.points[k]);
    }
    return {std::move(out), t};
}

PointCloud denormalize(const PointCloud& cloud, const NormalizationTransform& t) {
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const Vec3& p : cloud.points) out.points.push_back(t.invert(p));
    return out;
}

}  // namespace occlukit::camera
