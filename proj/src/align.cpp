// SPDX-License-Identifier: Apache-2.0
#include "occlukit/align.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>
#include <fmt/core.h>

#include "occlukit/kdtree.hpp"
#include "occlukit/parallel.hpp"

namespace occlukit::align {

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.scale = 1.0 / scale;
    inv.translation = -inv.scale * (inv.rotation * translation);
    return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation = rotation * other.rotation;
    out.scale = scale * other.scale;
    out.translation = scale * (rotation * other.translation) + translation;
    return out;
}

RigidTransform kabsch(const PointCloud& src, const PointCloud& dst, bool with_scale) {
    if (src.size() != dst.size()) {
        throw ArgumentError(fmt::format("kabsch: {} source vs {} target points", src.size(),
                                        dst.size()));
    }
    if (src.size() < 3) throw ArgumentError("kabsch needs at least 3 correspondences");

    const double n = static_cast<double>(src.size());
    Vec3 mu_s = Vec3::Zero();
    Vec3 mu_d = Vec3::Zero();
    for (std::size_t k = 0; k < src.size(); ++k) {
        mu_s += src[k];
        mu_d += dst[k];
    }
    mu_s /= n;
    mu_d /= n;

    Mat3 cov = Mat3::Zero();
    double var_s = 0.0;
    for (std::size_t k = 0; k < src.size(); ++k) {
        const Vec3 a = src[k] - mu_s;
        cov += (dst[k] - mu_d) * a.transpose();
        var_s += a.squaredNorm();
    }
    cov /= n;
    var_s /= n;

    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
        throw DataError("kabsch: degenerate (collinear or coincident) point configuration");
    }
    Vec3 sign = Vec3::Ones();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) sign(2) = -1.0;

    RigidTransform t;
    t.rotation = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
    // Polish: one Newton step toward the nearest orthonormal matrix.
    t.rotation = 0.5 * (t.rotation + t.rotation.inverse().transpose());
    t.scale = with_scale ? sv.dot(sign) / var_s : 1.0;
    t.translation = mu_d - t.scale * (t.rotation * mu_s);
    return t;
}

PointCloud apply_transform(const RigidTransform& t, const PointCloud& pts) {
    PointCloud out;
    out.points.reserve(pts.size());
    for (const Vec3& p : pts.points) out.points.push_back(t.apply(p));
    return out;
}

void IcpConfig::validate() const {
    if (max_iterations < 1) throw ArgumentError("ICP needs max_iterations >= 1");
    if (!(convergence_tol > 0.0)) throw ArgumentError("ICP convergence tolerance must be positive");
}

namespace {

/// Fills matched[i] with src[i]'s nearest dst point under t; returns the MSE.
double correspond(const KdTree& tree, const PointCloud& src, const PointCloud& dst,
                  const RigidTransform& t, unsigned workers, PointCloud& matched) {
    std::vector<double> d2(src.size());
    parallel_for(src.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Neighbor nb = tree.nearest(t.apply(src[i]));
            matched[i] = dst[nb.index];
            d2[i] = nb.squared_distance;
        }
    });
    double acc = 0.0;
    for (double v : d2) acc += v;
    return acc / static_cast<double>(src.size());
}

Vec3 centroid(const PointCloud& c) {
    Vec3 m = Vec3::Zero();
    for (const Vec3& p : c.points) m += p;
    return m / static_cast<double>(c.size());
}

}  // namespace

IcpResult icp_align(const PointCloud& src, const PointCloud& dst, const IcpConfig& cfg) {
    cfg.validate();
    if (src.size() < 3 || dst.size() < 3) throw ArgumentError("ICP needs at least 3 points per cloud");

    const KdTree tree(dst.points);
    IcpResult result;
    if (cfg.centroid_prealign) result.transform.translation = centroid(dst) - centroid(src);

    PointCloud matched;
    matched.points.resize(src.size());
    double mse = correspond(tree, src, dst, result.transform, cfg.workers, matched);
    result.mse_history.push_back(mse);

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        const RigidTransform candidate = kabsch(src, matched, cfg.with_scale);
        PointCloud next_matched;
        next_matched.points.resize(src.size());
        const double next = correspond(tree, src, dst, candidate, cfg.workers, next_matched);
        result.iterations = it;
        // The closed-form update cannot raise the error for fixed pairs and
        // re-pairing only lowers it; a rise here is rounding noise.
        if (next > mse) {
            result.converged = true;
            break;
        }
        result.transform = candidate;
        matched = std::move(next_matched);
        const double improvement = mse - next;
        mse = next;
        result.mse_history.push_back(mse);
        if (improvement < cfg.convergence_tol) {
            result.converged = true;
            break;
        }
    }
    result.final_rms = std::sqrt(mse);
    return result;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
    const Mat3 rel = a.transpose() * b;
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    // acos is ill-conditioned near 0; use the skew part for small angles.
    const Vec3 w(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
    return std::atan2(0.5 * w.norm(), c);
}

}  // namespace occlukit::align
