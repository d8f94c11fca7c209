// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <map>
#include <numbers>

#include <gtest/gtest.h>

#include "occlukit/geometry.hpp"
#include "support.hpp"

using namespace occlukit;
using namespace occlukit::geometry;

TEST(EvalGrid, BoxAllInside) {
    const auto g = eval_grid(AnalyticField::box(Vec3::Zero(), Vec3(2, 2, 2)), 5, Bounds{});
    for (float v : g.values) EXPECT_EQ(v, 1.0f);
}

TEST(EvalGrid, SphereCenterAndCorner) {
    // Even n has no exact center sample; use the sample nearest the center.
    const auto g = eval_grid(AnalyticField::sphere(Vec3::Zero(), 0.35), 8, Bounds{});
    EXPECT_EQ(g.at(3, 3, 3), 1.0f);
    EXPECT_EQ(g.at(0, 0, 0), 0.0f);
    const auto odd = eval_grid(AnalyticField::sphere(Vec3::Zero(), 0.35), 9, Bounds{});
    EXPECT_EQ(odd.position(4, 4, 4), Vec3::Zero());
    EXPECT_EQ(odd.at(4, 4, 4), 1.0f);
}

TEST(EvalGrid, MatchesLoopOracleAndWorkerCount) {
    const auto field = AnalyticField::make_union(
            {AnalyticField::sphere(Vec3(0.2, 0, 0), 0.3), AnalyticField::box(Vec3(-0.3, 0.1, 0), Vec3(0.2, 0.3, 0.1))});
    const Bounds b{Vec3(-1, -0.5, -0.75), Vec3(1, 0.5, 0.75)};
    const FieldProfile logistic{FieldProfile::Kind::kLogistic, 0.05};
    const auto g1 = eval_grid(field, 13, b, logistic, 1);
    const auto g4 = eval_grid(field, 13, b, logistic, 4);
    EXPECT_EQ(g1.values, g4.values);
    for (int z = 0; z < 13; ++z) {
        for (int y = 0; y < 13; ++y) {
            for (int x = 0; x < 13; ++x) {
                const Vec3 p(b.min.x() + x * (b.max.x() - b.min.x()) / 12, b.min.y() + y * (b.max.y() - b.min.y()) / 12,
                             b.min.z() + z * (b.max.z() - b.min.z()) / 12);
                const double sd = field.signed_distance(p);
                ASSERT_NEAR(g1.at(x, y, z), 1.0 / (1.0 + std::exp(sd / 0.05)), 1e-6);
            }
        }
    }
}

TEST(EvalGrid, Errors) {
    EXPECT_THROW(eval_grid(AnalyticField::sphere(Vec3::Zero(), 0.3), 1, Bounds{}), ArgumentError);
    EXPECT_THROW(AnalyticField::sphere(Vec3::Zero(), 0.0), ArgumentError);
    EXPECT_THROW(AnalyticField::box(Vec3::Zero(), Vec3(1, 0, 1)), ArgumentError);
}

TEST(SignedDistance, SphereAndBoxAreExact) {
    const auto s = AnalyticField::sphere(Vec3(1, 0, 0), 0.5);
    EXPECT_DOUBLE_EQ(s.signed_distance(Vec3(1, 0, 0)), -0.5);
    EXPECT_DOUBLE_EQ(s.signed_distance(Vec3(3, 0, 0)), 1.5);
    const auto b = AnalyticField::box(Vec3::Zero(), Vec3(1, 1, 1));
    EXPECT_DOUBLE_EQ(b.signed_distance(Vec3(2, 0, 0)), 1.0);
    EXPECT_DOUBLE_EQ(b.signed_distance(Vec3(2, 2, 1)), std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(b.signed_distance(Vec3(0.5, 0, 0)), -0.5);
}

TEST(MarchingCubes, UniformGridGivesEmptyMesh) {
    EXPECT_TRUE(marching_cubes(OccupancyGrid(8, Bounds{}, 0.0f)).empty());
    EXPECT_TRUE(marching_cubes(OccupancyGrid(8, Bounds{}, 1.0f)).empty());
}

TEST(MarchingCubes, SphereVerticesOnRadiusAndWatertight) {
    const auto g = eval_grid(AnalyticField::sphere(Vec3::Zero(), 0.35), 64, Bounds{});
    const auto mesh = marching_cubes(g);
    mesh.validate();
    const double voxel = g.spacing(0);
    for (const auto& v : mesh.vertices) ASSERT_LT(std::abs(v.norm() - 0.35), 1.5 * voxel);
    const auto topo = topology(mesh);
    EXPECT_TRUE(topo.watertight());
    EXPECT_EQ(topo.euler_characteristic, 2);
    EXPECT_GT(signed_volume(mesh), 0.0);  // outward winding
}

TEST(MarchingCubes, EveryCaseIsClosedAndOriented) {
    // A single set corner (and its complement) inside a padded 4^3 block
    // exercises all 256 configurations once shifted around; every resulting
    // surface must be closed with outward winding.
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        OccupancyGrid g(6, Bounds{});
        for (int z = 1; z < 5; ++z) {
            for (int y = 1; y < 5; ++y) {
                for (int x = 1; x < 5; ++x) g.at(x, y, z) = static_cast<float>(rng.below(2));
            }
        }
        const auto mesh = marching_cubes(g);
        if (mesh.empty()) continue;
        const auto topo = topology(mesh);
        ASSERT_TRUE(topo.watertight()) << "trial " << trial;
        ASSERT_GT(signed_volume(mesh), 0.0) << "trial " << trial;
    }
}

TEST(MarchingCubes, OutputIndependentOfWorkers) {
    const auto g = eval_grid(AnalyticField::make_union({AnalyticField::sphere(Vec3(0.3, 0, 0), 0.3),
                                                        AnalyticField::sphere(Vec3(-0.3, 0.1, 0), 0.25)}),
                             40, Bounds{});
    const auto a = marching_cubes(g, 0.5, 1);
    const auto b = marching_cubes(g, 0.5, 3);
    EXPECT_EQ(a.vertices, b.vertices);
    EXPECT_EQ(a.triangles, b.triangles);
}

TEST(MarchingCubes, InterpolatesLinearly) {
    // Values ramp along x: 0 at x=0, 1 at x=1 -> surface at 0.25 of the edge for iso 0.25.
    OccupancyGrid g(2, Bounds{Vec3(0, 0, 0), Vec3(1, 1, 1)});
    for (int z = 0; z < 2; ++z) {
        for (int y = 0; y < 2; ++y) g.at(1, y, z) = 1.0f;
    }
    const auto mesh = marching_cubes(g, 0.25);
    ASSERT_EQ(mesh.vertices.size(), 4u);
    for (const auto& v : mesh.vertices) EXPECT_DOUBLE_EQ(v.x(), 0.25);
}

TEST(MarchingCubes, LogisticSphereAreaIsAccurate) {
    const FieldProfile smooth{FieldProfile::Kind::kLogistic, 0.01};
    const auto mesh = marching_cubes(eval_grid(AnalyticField::sphere(Vec3::Zero(), 0.35), 128, Bounds{}, smooth));
    const double exact = 4.0 * std::numbers::pi * 0.35 * 0.35;
    EXPECT_NEAR(surface_area(mesh) / exact, 1.0, 0.05);
}

TEST(MarchingCubes, HardSphereAreaOvershootIsBounded) {
    // Binary samples put every vertex at an edge midpoint; the stair-stepped
    // surface stays about 9% larger than the sphere at any resolution.
    const auto mesh = marching_cubes(eval_grid(AnalyticField::sphere(Vec3::Zero(), 0.35), 128, Bounds{}));
    const double ratio = surface_area(mesh) / (4.0 * std::numbers::pi * 0.35 * 0.35);
    EXPECT_GT(ratio, 1.0);
    EXPECT_LT(ratio, 1.12);
}

TEST(SurfaceSample, SingleTriangleBarycentric) {
    TriangleMesh tri;
    tri.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 1, 0}};
    tri.triangles = {{0, 1, 2}};
    const auto pts = sample_surface(tri, 2000, 3);
    ASSERT_EQ(pts.size(), 2000u);
    for (const auto& p : pts.points) {
        const double u = p.x() / 2.0, v = p.y();
        ASSERT_GE(u, -1e-12);
        ASSERT_GE(v, -1e-12);
        ASSERT_LE(u + v, 1.0 + 1e-12);
        ASSERT_EQ(p.z(), 0.0);
    }
}

TEST(SurfaceSample, AreaWeightedChoice) {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
    m.triangles = {{0, 1, 2}, {3, 4, 5}};  // areas 1.5 and 0.5
    const std::size_t n = 100000;
    const auto s = sample_surface_with_faces(m, n, 9);
    std::size_t first = 0;
    for (auto t : s.triangle) first += t == 0;
    const double sigma = std::sqrt(n * 0.75 * 0.25);
    EXPECT_LE(std::abs(static_cast<double>(first) - 0.75 * n), 3 * sigma);
}

TEST(SurfaceSample, DefaultsDeterminismAndErrors) {
    EXPECT_EQ(kDefaultSurfaceSamples, 10000u);
    const auto mesh = marching_cubes(eval_grid(AnalyticField::sphere(Vec3::Zero(), 0.5), 24, Bounds{}));
    const auto a = sample_surface(mesh);
    EXPECT_EQ(a.size(), 10000u);
    EXPECT_EQ(a.points, sample_surface(mesh).points);
    EXPECT_NE(a.points, sample_surface(mesh, 10000, 1).points);
    TriangleMesh flat;
    flat.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    flat.triangles = {{0, 1, 2}};
    EXPECT_THROW(sample_surface(flat, 10), DataError);
}

TEST(SurfaceSample, PointsLieOnTheirTriangle) {
    const auto mesh = marching_cubes(eval_grid(AnalyticField::sphere(Vec3::Zero(), 0.5), 20, Bounds{}));
    const auto s = sample_surface_with_faces(mesh, 5000, 4);
    for (std::size_t k = 0; k < s.points.size(); ++k) {
        const auto& t = mesh.triangles[s.triangle[k]];
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        const Vec3 n = (b - a).cross(c - a).normalized();
        ASSERT_LT(std::abs(n.dot(s.points[k] - a)), 1e-6);
    }
}

TEST(GridIo, RoundTripAndMagic) {
    Rng rng(1);
    OccupancyGrid g(5, Bounds{Vec3(-1, -2, -0.5), Vec3(1, 2, 0.5)});
    for (auto& v : g.values) v = static_cast<float>(rng.uniform());
    const std::string bytes = encode_grid(g);
    EXPECT_EQ(bytes.substr(0, 16), std::string("OCCGRID1") + std::string(8, '\0'));
    EXPECT_EQ(bytes.size(), 16u + 4 + 24 + 125 * 4);
    const auto back = decode_grid(bytes);
    EXPECT_EQ(back.values, g.values);
    EXPECT_EQ(back.bounds.min, g.bounds.min);
    EXPECT_EQ(back.bounds.max, g.bounds.max);
    EXPECT_THROW(decode_grid(bytes.substr(0, bytes.size() - 1)), DataError);
    EXPECT_THROW(decode_grid("OCCGRID2" + bytes.substr(8)), DataError);
}

TEST(Topology, TetrahedronCounts) {
    TriangleMesh tet;
    tet.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    tet.triangles = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
    const auto t = topology(tet);
    EXPECT_EQ(t.edges, 6u);
    EXPECT_EQ(t.euler_characteristic, 2);
    EXPECT_TRUE(t.watertight());
    EXPECT_NEAR(signed_volume(tet), 1.0 / 6.0, 1e-15);
    tet.triangles.pop_back();
    EXPECT_FALSE(topology(tet).watertight());
}
