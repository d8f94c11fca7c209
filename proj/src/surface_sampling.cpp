// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "occlukit/geometry.hpp"
#include "occlukit/rng.hpp"

namespace occlukit::geometry {

SurfaceSample sample_surface_with_faces(const TriangleMesh& mesh, std::size_t n,
                                        std::uint64_t seed) {
    mesh.validate();
    std::vector<double> cdf(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        total += triangle_area(mesh, t);
        cdf[t] = total;
    }
    if (!(total > 0.0)) throw DataError("cannot sample a mesh with zero surface area");

    Rng rng(seed);
    SurfaceSample out;
    out.points.points.reserve(n);
    out.triangle.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;  // u rounding up to total
        const auto t = static_cast<std::size_t>(it - cdf.begin());

        const auto& tri = mesh.triangles[t];
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        out.points.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
        out.triangle.push_back(static_cast<std::uint32_t>(t));
    }
    return out;
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
    return sample_surface_with_faces(mesh, n, seed).points;
}

}  // namespace occlukit::geometry
