// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace occlukit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Raised for malformed or inconsistent input data. The CLI maps it to exit
/// code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a caller violates an operation's precondition (bad argument
/// values rather than bad file contents).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct PointCloud {
    std::vector<Vec3> points;

    PointCloud() = default;
    explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}

    [[nodiscard]] std::size_t size() const { return points.size(); }
    [[nodiscard]] bool empty() const { return points.empty(); }
    const Vec3& operator[](std::size_t i) const { return points[i]; }
    Vec3& operator[](std::size_t i) { return points[i]; }
};

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;

    [[nodiscard]] bool empty() const { return triangles.empty(); }

    /// Throws DataError when an index is out of range or a triangle repeats a
    /// vertex index.
    void validate() const;
};

/// Axis-aligned box.
struct Bounds {
    Vec3 min{-1.0, -1.0, -1.0};
    Vec3 max{1.0, 1.0, 1.0};

    [[nodiscard]] bool valid() const {
        return (min.array() < max.array()).all();
    }
    [[nodiscard]] Vec3 center() const { return 0.5 * (min + max); }
    [[nodiscard]] Vec3 extent() const { return max - min; }
};

}  // namespace occlukit
