// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "occlukit/types.hpp"

namespace occlukit::align {

/// p -> scale * R p + t. scale stays 1 unless the similarity variant is used.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    double scale = 1.0;

    [[nodiscard]] Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
    [[nodiscard]] RigidTransform inverse() const;
    /// (*this) ∘ other: applies other first.
    [[nodiscard]] RigidTransform compose(const RigidTransform& other) const;

    static RigidTransform identity() { return {}; }
};

/// Least-squares transform taking src[k] onto dst[k]. Reflections are
/// corrected by flipping the smallest singular direction. Throws
/// ArgumentError for fewer than 3 pairs and DataError for (near-)collinear
/// configurations.
RigidTransform kabsch(const PointCloud& src, const PointCloud& dst, bool with_scale = false);

PointCloud apply_transform(const RigidTransform& t, const PointCloud& pts);

struct IcpConfig {
    int max_iterations = 100;
    /// Stop when the mean-squared nearest-neighbor error drops by less than this.
    double convergence_tol = 1e-9;
    bool with_scale = false;
    /// Start from the translation that matches centroids.
    bool centroid_prealign = true;
    unsigned workers = 0;

    void validate() const;
};

struct IcpResult {
    RigidTransform transform;  ///< maps src into dst's frame
    double final_rms = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Mean-squared NN error before the first update, then after each one.
    std::vector<double> mse_history;
};

/// Point-to-point ICP: nearest neighbors (src -> dst, ties to the lowest dst
/// index) alternating with a closed-form update, until the MSE improvement
/// falls below the tolerance or the iteration cap is reached.
IcpResult icp_align(const PointCloud& src, const PointCloud& dst, const IcpConfig& cfg = {});

/// Angle of the relative rotation Ra^T Rb, in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

}  // namespace occlukit::align
