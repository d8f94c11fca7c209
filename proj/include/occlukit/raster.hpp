// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "occlukit/types.hpp"

namespace occlukit {

/// 8-bit image with 1 (gray) or 3 (RGB) interleaved channels, row-major.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0);
    Image(int w, int h, int c, std::vector<std::uint8_t> samples);

    [[nodiscard]] std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    [[nodiscard]] std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * width + x) * channels;
    }
    std::uint8_t* pixel(int x, int y) { return data.data() + offset(x, y); }
    [[nodiscard]] const std::uint8_t* pixel(int x, int y) const {
        return data.data() + offset(x, y);
    }

    bool operator==(const Image&) const = default;
};

/// Single-channel float raster, row-major. Holds depth maps and soft masks.
struct FloatRaster {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    FloatRaster() = default;
    FloatRaster(int w, int h, float fill = 0.0f);
    FloatRaster(int w, int h, std::vector<float> samples);

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] float at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    [[nodiscard]] std::size_t size() const { return data.size(); }

    bool operator==(const FloatRaster&) const = default;
};

/// Binary mask, one byte (0 or 1) per pixel, row-major.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    Mask() = default;
    Mask(int w, int h, bool fill = false);

    [[nodiscard]] bool at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    [[nodiscard]] std::size_t size() const { return bits.size(); }
    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool same_shape(const Mask& o) const {
        return width == o.width && height == o.height;
    }

    bool operator==(const Mask&) const = default;
};

}  // namespace occlukit
