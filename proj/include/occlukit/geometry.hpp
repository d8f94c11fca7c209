// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "occlukit/types.hpp"

/// Occupancy grids, analytic implicit shapes, marching cubes and area-weighted
/// surface sampling.
///
/// Grid convention: values live at cell centers, and `bounds` are the
/// outermost centers, so sample i along an axis sits at
/// min + i * (max - min) / (n - 1).
namespace occlukit::geometry {

struct OccupancyGrid {
    int resolution = 0;
    Bounds bounds;
    std::vector<float> values;  ///< n^3 values, x fastest, then y, then z

    OccupancyGrid() = default;
    OccupancyGrid(int n, const Bounds& b, float fill = 0.0f);

    [[nodiscard]] std::size_t index(int x, int y, int z) const {
        const auto n = static_cast<std::size_t>(resolution);
        return (static_cast<std::size_t>(z) * n + y) * n + x;
    }
    [[nodiscard]] float at(int x, int y, int z) const { return values[index(x, y, z)]; }
    float& at(int x, int y, int z) { return values[index(x, y, z)]; }
    [[nodiscard]] double spacing(int axis) const {
        return (bounds.max[axis] - bounds.min[axis]) / (resolution - 1);
    }
    [[nodiscard]] Vec3 position(int x, int y, int z) const;

    void validate() const;
};

/// How an analytic shape turns its signed distance into occupancy.
struct FieldProfile {
    enum class Kind { kHard, kLogistic };
    Kind kind = Kind::kHard;
    /// Logistic width: occupancy = 1 / (1 + exp(sdf / width)).
    double width = 0.01;
};

/// Sphere, box or union of shapes, evaluated through a signed distance.
class AnalyticField {
public:
    enum class Kind { kSphere, kBox, kUnion };

    static AnalyticField sphere(const Vec3& center, double radius);
    static AnalyticField box(const Vec3& center, const Vec3& half_extents);
    static AnalyticField make_union(std::vector<AnalyticField> parts);

    /// Negative inside, positive outside. Exact for sphere and box; the union
    /// takes the minimum.
    [[nodiscard]] double signed_distance(const Vec3& p) const;
    [[nodiscard]] double occupancy(const Vec3& p, const FieldProfile& profile = {}) const;

    [[nodiscard]] Kind kind() const { return kind_; }

private:
    Kind kind_ = Kind::kSphere;
    Vec3 center_ = Vec3::Zero();
    Vec3 half_ = Vec3::Ones();
    double radius_ = 1.0;
    std::vector<AnalyticField> parts_;
};

using OccupancyQuery = std::function<double(const Vec3&)>;

/// Samples any occupancy function on an n^3 grid; parallel over z slabs.
OccupancyGrid eval_grid(const OccupancyQuery& query, int resolution, const Bounds& bounds,
                        unsigned workers = 0);
OccupancyGrid eval_grid(const AnalyticField& field, int resolution, const Bounds& bounds,
                        const FieldProfile& profile = {}, unsigned workers = 0);

/// Marching cubes with one shared vertex per crossed lattice edge. Samples
/// >= isolevel count as inside; triangles wind counter-clockwise seen from
/// outside. Output ordering is canonical (independent of worker count).
TriangleMesh marching_cubes(const OccupancyGrid& grid, double isolevel = 0.5,
                            unsigned workers = 0);

/// Triangle area of one face.
double triangle_area(const TriangleMesh& mesh, std::size_t t);
double surface_area(const TriangleMesh& mesh);
/// Signed volume from the divergence theorem; positive for outward winding.
double signed_volume(const TriangleMesh& mesh);

inline constexpr std::size_t kDefaultSurfaceSamples = 10000;

struct SurfaceSample {
    PointCloud points;
    std::vector<std::uint32_t> triangle;  ///< source triangle of each point
};

/// Area-weighted triangle choice, square-root barycentric point placement.
/// Throws DataError when the mesh has zero total area.
SurfaceSample sample_surface_with_faces(const TriangleMesh& mesh, std::size_t n,
                                        std::uint64_t seed);
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n = kDefaultSurfaceSamples,
                          std::uint64_t seed = 0);

/// Binary grid file: 16-byte magic ("OCCGRID1" + 8 NUL bytes), little-endian
/// u32 n, 6 f32 bounds (min xyz, max xyz), n^3 f32 values x-fastest.
std::string encode_grid(const OccupancyGrid& grid);
OccupancyGrid decode_grid(std::string_view bytes, std::string_view name = "<memory>");
OccupancyGrid read_grid(const std::filesystem::path& path);
void write_grid(const OccupancyGrid& grid, const std::filesystem::path& path);

/// Edge-manifold check used by tests and the CLI: counts of edges with
/// exactly two incident faces versus others, plus V - E + F.
struct TopologyReport {
    std::size_t vertices = 0;
    std::size_t edges = 0;
    std::size_t faces = 0;
    std::size_t non_manifold_edges = 0;  ///< edges not shared by exactly 2 faces
    long euler_characteristic = 0;

    [[nodiscard]] bool watertight() const { return non_manifold_edges == 0; }
};
TopologyReport topology(const TriangleMesh& mesh);

}  // namespace occlukit::geometry
