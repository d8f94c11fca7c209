// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "occlukit/geometry.hpp"
#include "occlukit/parallel.hpp"

namespace occlukit::geometry {

namespace {

constexpr std::array<std::array<int, 16>, 256> kTriTable = {{
#include "mc_tables.inc"
}};

// Cube corner offsets (x, y, z).
constexpr std::array<std::array<int, 3>, 8> kCorner = {{
        {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}};

// Cube edge -> (lattice offset of its lower end, axis).
struct EdgeRef {
    int dx, dy, dz, axis;
};
constexpr std::array<EdgeRef, 12> kEdge = {{{0, 0, 0, 0},
                                            {1, 0, 0, 1},
                                            {0, 1, 0, 0},
                                            {0, 0, 0, 1},
                                            {0, 0, 1, 0},
                                            {1, 0, 1, 1},
                                            {0, 1, 1, 0},
                                            {0, 0, 1, 1},
                                            {0, 0, 0, 2},
                                            {1, 0, 0, 2},
                                            {1, 1, 0, 2},
                                            {0, 1, 0, 2}}};

}  // namespace

TriangleMesh marching_cubes(const OccupancyGrid& grid, double isolevel, unsigned workers) {
    grid.validate();
    const int n = grid.resolution;
    const std::size_t total = grid.values.size();
    const auto inside = [&](std::size_t k) { return grid.values[k] >= isolevel; };
    const std::array<std::size_t, 3> stride = {1, static_cast<std::size_t>(n),
                                               static_cast<std::size_t>(n) * n};

    // Pass 1: count crossing lattice edges per z plane, in (z, y, x, axis)
    // order, so vertex numbering is canonical.
    std::vector<std::size_t> plane_count(n, 0);
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t z0, std::size_t z1) {
        for (auto z = z0; z < z1; ++z) {
            std::size_t c = 0;
            for (int y = 0; y < n; ++y) {
                for (int x = 0; x < n; ++x) {
                    const std::size_t k = grid.index(x, y, static_cast<int>(z));
                    const std::array<int, 3> coord = {x, y, static_cast<int>(z)};
                    for (int a = 0; a < 3; ++a) {
                        if (coord[a] + 1 < n && inside(k) != inside(k + stride[a])) ++c;
                    }
                }
            }
            plane_count[z] = c;
        }
    });
    std::vector<std::size_t> plane_offset(n + 1, 0);
    std::partial_sum(plane_count.begin(), plane_count.end(), plane_offset.begin() + 1);

    TriangleMesh mesh;
    mesh.vertices.resize(plane_offset[n]);
    std::array<std::vector<std::int32_t>, 3> edge_vertex;
    for (auto& ev : edge_vertex) ev.assign(total, -1);

    // Pass 2: place vertices by linear interpolation.
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t z0, std::size_t z1) {
        for (auto z = z0; z < z1; ++z) {
            auto next = static_cast<std::int32_t>(plane_offset[z]);
            for (int y = 0; y < n; ++y) {
                for (int x = 0; x < n; ++x) {
                    const std::size_t k = grid.index(x, y, static_cast<int>(z));
                    const std::array<int, 3> coord = {x, y, static_cast<int>(z)};
                    for (int a = 0; a < 3; ++a) {
                        if (coord[a] + 1 >= n || inside(k) == inside(k + stride[a])) continue;
                        const double v0 = grid.values[k];
                        const double v1 = grid.values[k + stride[a]];
                        const double t = (isolevel - v0) / (v1 - v0);
                        Vec3 p = grid.position(x, y, static_cast<int>(z));
                        p[a] += t * grid.spacing(a);
                        mesh.vertices[next] = p;
                        edge_vertex[a][k] = next++;
                    }
                }
            }
        }
    });

    // Pass 3: emit triangles cube by cube, one buffer per z layer.
    std::vector<std::vector<Triangle>> layer(n > 1 ? n - 1 : 0);
    parallel_for(layer.size(), workers, [&](std::size_t z0, std::size_t z1) {
        for (auto z = z0; z < z1; ++z) {
            auto& out = layer[z];
            for (int y = 0; y + 1 < n; ++y) {
                for (int x = 0; x + 1 < n; ++x) {
                    int config = 0;
                    for (int c = 0; c < 8; ++c) {
                        const auto& o = kCorner[c];
                        if (!inside(grid.index(x + o[0], y + o[1], static_cast<int>(z) + o[2]))) {
                            config |= 1 << c;
                        }
                    }
                    const auto& row = kTriTable[config];
                    for (int e = 0; row[e] >= 0; e += 3) {
                        Triangle tri;
                        for (int j = 0; j < 3; ++j) {
                            const auto& ref = kEdge[row[e + j]];
                            const std::size_t k =
                                    grid.index(x + ref.dx, y + ref.dy, static_cast<int>(z) + ref.dz);
                            tri[j] = static_cast<std::uint32_t>(edge_vertex[ref.axis][k]);
                        }
                        out.push_back(tri);
                    }
                }
            }
        }
    });
    std::size_t count = 0;
    for (const auto& l : layer) count += l.size();
    mesh.triangles.reserve(count);
    for (const auto& l : layer) mesh.triangles.insert(mesh.triangles.end(), l.begin(), l.end());
    return mesh;
}

double triangle_area(const TriangleMesh& mesh, std::size_t t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    return 0.5 * (b - a).cross(c - a).norm();
}

double surface_area(const TriangleMesh& mesh) {
    double acc = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) acc += triangle_area(mesh, t);
    return acc;
}

double signed_volume(const TriangleMesh& mesh) {
    double acc = 0.0;
    for (const auto& tri : mesh.triangles) {
        acc += mesh.vertices[tri[0]].dot(mesh.vertices[tri[1]].cross(mesh.vertices[tri[2]]));
    }
    return acc / 6.0;
}

TopologyReport topology(const TriangleMesh& mesh) {
    std::unordered_map<std::uint64_t, std::uint32_t> edge_faces;
    edge_faces.reserve(mesh.triangles.size() * 2);
    for (const auto& tri : mesh.triangles) {
        for (int j = 0; j < 3; ++j) {
            std::uint64_t a = tri[j];
            std::uint64_t b = tri[(j + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edge_faces[(a << 32) | b];
        }
    }
    TopologyReport r;
    r.vertices = mesh.vertices.size();
    r.edges = edge_faces.size();
    r.faces = mesh.triangles.size();
    for (const auto& [key, c] : edge_faces) r.non_manifold_edges += c != 2 ? 1 : 0;
    r.euler_characteristic = static_cast<long>(r.vertices) - static_cast<long>(r.edges) +
                             static_cast<long>(r.faces);
    return r;
}

}  // namespace occlukit::geometry
