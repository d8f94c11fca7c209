// SPDX-License-Identifier: Apache-2.0
#include "occlukit/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace occlukit {

KdTree::KdTree(std::span<const Vec3> points) {
    if (points.size() >= std::numeric_limits<std::uint32_t>::max()) {
        throw ArgumentError("kd-tree supports fewer than 2^32 points");
    }
    index_.resize(points.size());
    std::iota(index_.begin(), index_.end(), 0u);
    points_.assign(points.begin(), points.end());
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 1);
        build(0, static_cast<std::uint32_t>(points_.size()));
        // Reorder the point copy to match the permuted index for locality.
        std::vector<Vec3> ordered(points_.size());
        for (std::size_t k = 0; k < index_.size(); ++k) ordered[k] = points[index_[k]];
        points_ = std::move(ordered);
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{0.0, begin, end, -1, -1, 0});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::uint32_t k = begin; k < end; ++k) {
        lo = lo.cwiseMin(points_[index_[k]]);
        hi = hi.cwiseMax(points_[index_[k]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all points coincide

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const double split = points_[index_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    Node& n = nodes_[id];
    n.split = split;
    n.axis = static_cast<std::uint8_t>(axis);
    n.left = left;
    n.right = right;
    return id;
}

Neighbor KdTree::nearest(const Vec3& query) const {
    Neighbor best;
    if (!nodes_.empty()) search(0, query, best);
    return best;
}

void KdTree::search(std::int32_t node_id, const Vec3& q, Neighbor& best) const {
    const Node& node = nodes_[node_id];
    if (node.left < 0) {
        for (std::uint32_t k = node.begin; k < node.end; ++k) {
            const double d2 = squared_distance(q, points_[k]);
            if (d2 < best.squared_distance ||
                (d2 == best.squared_distance && index_[k] < best.index)) {
                best.squared_distance = d2;
                best.index = index_[k];
            }
        }
        return;
    }
    // Left subtree holds coordinates <= split, right holds >= split.
    const double diff = q[node.axis] - node.split;
    const std::int32_t near = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far = diff <= 0.0 ? node.right : node.left;
    search(near, q, best);
    if (diff * diff <= best.squared_distance) search(far, q, best);
}

}  // namespace occlukit
