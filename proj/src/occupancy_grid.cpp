// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cmath>
#include <cstring>

#include <fmt/core.h>

#include "occlukit/geometry.hpp"
#include "occlukit/io.hpp"
#include "occlukit/parallel.hpp"

namespace occlukit::geometry {

OccupancyGrid::OccupancyGrid(int n, const Bounds& b, float fill) : resolution(n), bounds(b) {
    validate();
    const auto count = static_cast<std::size_t>(n) * n * n;
    values.assign(count, fill);
}

Vec3 OccupancyGrid::position(int x, int y, int z) const {
    const Vec3 step = bounds.extent() / static_cast<double>(resolution - 1);
    return bounds.min + Vec3(x * step.x(), y * step.y(), z * step.z());
}

void OccupancyGrid::validate() const {
    if (resolution < 2) throw ArgumentError(fmt::format("grid resolution must be >= 2, got {}", resolution));
    if (!bounds.valid() || !bounds.min.allFinite() || !bounds.max.allFinite()) {
        throw ArgumentError("grid bounds need min < max on every axis");
    }
}

AnalyticField AnalyticField::sphere(const Vec3& center, double radius) {
    if (!(radius > 0.0)) throw ArgumentError("sphere radius must be positive");
    AnalyticField f;
    f.kind_ = Kind::kSphere;
    f.center_ = center;
    f.radius_ = radius;
    return f;
}

AnalyticField AnalyticField::box(const Vec3& center, const Vec3& half_extents) {
    if (!(half_extents.array() > 0.0).all()) throw ArgumentError("box half-extents must be positive");
    AnalyticField f;
    f.kind_ = Kind::kBox;
    f.center_ = center;
    f.half_ = half_extents;
    return f;
}

AnalyticField AnalyticField::make_union(std::vector<AnalyticField> parts) {
    if (parts.empty()) throw ArgumentError("union needs at least one part");
    AnalyticField f;
    f.kind_ = Kind::kUnion;
    f.parts_ = std::move(parts);
    return f;
}

double AnalyticField::signed_distance(const Vec3& p) const {
    switch (kind_) {
        case Kind::kSphere: return (p - center_).norm() - radius_;
        case Kind::kBox: {
            const Vec3 q = (p - center_).cwiseAbs() - half_;
            return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
        }
        case Kind::kUnion: {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& part : parts_) d = std::min(d, part.signed_distance(p));
            return d;
        }
    }
    return 0.0;
}

double AnalyticField::occupancy(const Vec3& p, const FieldProfile& profile) const {
    const double d = signed_distance(p);
    if (profile.kind == FieldProfile::Kind::kHard) return d <= 0.0 ? 1.0 : 0.0;
    return 1.0 / (1.0 + std::exp(d / profile.width));
}

OccupancyGrid eval_grid(const OccupancyQuery& query, int resolution, const Bounds& bounds,
                        unsigned workers) {
    OccupancyGrid grid(resolution, bounds);
    const int n = resolution;
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t z0, std::size_t z1) {
        for (int z = static_cast<int>(z0); z < static_cast<int>(z1); ++z) {
            for (int y = 0; y < n; ++y) {
                for (int x = 0; x < n; ++x) {
                    const double v = query(grid.position(x, y, z));
                    if (!std::isfinite(v)) {
                        throw DataError(fmt::format("occupancy query returned {} at voxel ({}, {}, {})",
                                                    v, x, y, z));
                    }
                    grid.at(x, y, z) = static_cast<float>(v);
                }
            }
        }
    });
    return grid;
}

OccupancyGrid eval_grid(const AnalyticField& field, int resolution, const Bounds& bounds,
                        const FieldProfile& profile, unsigned workers) {
    return eval_grid([&](const Vec3& p) { return field.occupancy(p, profile); }, resolution, bounds,
                     workers);
}

namespace {

constexpr char kMagic[16] = {'O', 'C', 'C', 'G', 'R', 'I', 'D', '1', 0, 0, 0, 0, 0, 0, 0, 0};

template <typename T>
void put(std::string& out, T v) {
    static_assert(std::endian::native == std::endian::little);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t off) {
    T v;
    std::memcpy(&v, bytes.data() + off, sizeof(T));
    return v;
}

}  // namespace

std::string encode_grid(const OccupancyGrid& grid) {
    grid.validate();
    std::string out(kMagic, sizeof(kMagic));
    put(out, static_cast<std::uint32_t>(grid.resolution));
    for (int a = 0; a < 3; ++a) put(out, static_cast<float>(grid.bounds.min[a]));
    for (int a = 0; a < 3; ++a) put(out, static_cast<float>(grid.bounds.max[a]));
    out.reserve(out.size() + grid.values.size() * 4);
    for (float v : grid.values) put(out, v);
    return out;
}

OccupancyGrid decode_grid(std::string_view bytes, std::string_view name) {
    constexpr std::size_t header = 16 + 4 + 24;
    if (bytes.size() < header || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw DataError(fmt::format("{}: not an OCCGRID1 file", name));
    }
    const auto n = get<std::uint32_t>(bytes, 16);
    if (n < 2 || n > 4096) throw DataError(fmt::format("{}: bad grid resolution {}", name, n));
    Bounds b;
    for (int a = 0; a < 3; ++a) {
        b.min[a] = get<float>(bytes, 20 + 4 * a);
        b.max[a] = get<float>(bytes, 32 + 4 * a);
    }
    if (!b.valid()) throw DataError(fmt::format("{}: grid bounds need min < max", name));
    const std::size_t count = static_cast<std::size_t>(n) * n * n;
    if (bytes.size() != header + 4 * count) {
        throw DataError(fmt::format("{}: expected {} bytes of grid values, found {}", name,
                                    4 * count, bytes.size() - header));
    }
    OccupancyGrid grid(static_cast<int>(n), b);
    for (std::size_t k = 0; k < count; ++k) {
        const float v = get<float>(bytes, header + 4 * k);
        if (!std::isfinite(v)) {
            throw DataError(fmt::format("{}: non-finite grid value at index {}", name, k));
        }
        grid.values[k] = v;
    }
    return grid;
}

OccupancyGrid read_grid(const std::filesystem::path& path) {
    return decode_grid(io::read_file(path), path.string());
}

void write_grid(const OccupancyGrid& grid, const std::filesystem::path& path) {
    io::write_file(path, encode_grid(grid));
}

}  // namespace occlukit::geometry
