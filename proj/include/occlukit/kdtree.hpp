// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "occlukit/types.hpp"

namespace occlukit {

/// Squared Euclidean distance with a fixed evaluation order, shared by the
/// kd-tree and the brute-force scans so both produce bit-identical values.
inline double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

struct Neighbor {
    std::uint32_t index = std::numeric_limits<std::uint32_t>::max();
    double squared_distance = std::numeric_limits<double>::infinity();
};

/// Static 3-d tree for exact nearest-neighbor queries.
///
/// Splits at the median of the widest axis; leaves hold up to kLeafSize
/// points. Queries backtrack exactly. Among equidistant points the one with
/// the lowest original index wins, so results never depend on tree layout.
class KdTree {
public:
    static constexpr std::size_t kLeafSize = 8;

    explicit KdTree(std::span<const Vec3> points);

    [[nodiscard]] Neighbor nearest(const Vec3& query) const;
    [[nodiscard]] std::size_t size() const { return points_.size(); }

private:
    struct Node {
        double split = 0.0;
        std::uint32_t begin = 0;  // leaf range into points_
        std::uint32_t end = 0;
        std::int32_t left = -1;  // -1 marks a leaf
        std::int32_t right = -1;
        std::uint8_t axis = 0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Vec3& q, Neighbor& best) const;

    std::vector<Vec3> points_;          // permuted copy
    std::vector<std::uint32_t> index_;  // original index of points_[k]
    std::vector<Node> nodes_;
};

}  // namespace occlukit
