// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>

#include <fmt/core.h>

#include "occlukit/raster.hpp"
#include "occlukit/rng.hpp"
#include "occlukit/types.hpp"

namespace occlukit {

namespace {

void check_dims(int w, int h) {
    if (w < 1 || h < 1) {
        throw ArgumentError(fmt::format("raster dimensions must be >= 1, got {}x{}", w, h));
    }
}

}  // namespace

void TriangleMesh::validate() const {
    const auto n = vertices.size();
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        for (auto idx : tri) {
            if (idx >= n) {
                throw DataError(fmt::format(
                        "triangle {} references vertex {} but mesh has {} vertices", t, idx, n));
            }
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            throw DataError(fmt::format("triangle {} repeats a vertex index", t));
        }
    }
}

Image::Image(int w, int h, int c, std::uint8_t fill) : width(w), height(h), channels(c) {
    check_dims(w, h);
    if (c != 1 && c != 3) throw ArgumentError(fmt::format("unsupported channel count {}", c));
    data.assign(pixel_count() * c, fill);
}

Image::Image(int w, int h, int c, std::vector<std::uint8_t> samples)
    : width(w), height(h), channels(c), data(std::move(samples)) {
    check_dims(w, h);
    if (c != 1 && c != 3) throw ArgumentError(fmt::format("unsupported channel count {}", c));
    if (data.size() != pixel_count() * c) {
        throw ArgumentError(fmt::format("image data has {} samples, expected {}", data.size(),
                                        pixel_count() * c));
    }
}

FloatRaster::FloatRaster(int w, int h, float fill) : width(w), height(h) {
    check_dims(w, h);
    data.assign(static_cast<std::size_t>(w) * h, fill);
}

FloatRaster::FloatRaster(int w, int h, std::vector<float> samples)
    : width(w), height(h), data(std::move(samples)) {
    check_dims(w, h);
    if (data.size() != static_cast<std::size_t>(w) * h) {
        throw ArgumentError(fmt::format("raster data has {} samples, expected {}", data.size(),
                                        static_cast<std::size_t>(w) * h));
    }
}

Mask::Mask(int w, int h, bool fill) : width(w), height(h) {
    check_dims(w, h);
    bits.assign(static_cast<std::size_t>(w) * h, fill ? 1 : 0);
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n <= 1) return 0;
    // Lemire-free simple rejection: discard the biased tail.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

}  // namespace occlukit
