// SPDX-License-Identifier: Apache-2.0
#include "occlukit/maskops.hpp"

#include <cstring>

#include <fmt/core.h>

namespace occlukit::maskops {

namespace {

void require_same_shape(const Mask& a, const Mask& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DataError(fmt::format("{}: resolution mismatch {}x{} vs {}x{}", what, a.width,
                                    a.height, b.width, b.height));
    }
}

}  // namespace

double iou(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "iou");
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t k = 0; k < a.bits.size(); ++k) {
        inter += a.bits[k] & b.bits[k];
        uni += a.bits[k] | b.bits[k];
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    // Fixed-point weights (x1000) so rounding is exact: floor((299R + 587G +
    // 114B + 500) / 1000).
    return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    Image gray(img.width, img.height, 1);
    for (std::size_t k = 0; k < img.pixel_count(); ++k) {
        const auto* p = img.data.data() + 3 * k;
        gray.data[k] = luma601(p[0], p[1], p[2]);
    }
    return gray;
}

Image to_rgb(const Image& img) {
    if (img.channels == 3) return img;
    Image rgb(img.width, img.height, 3);
    for (std::size_t k = 0; k < img.pixel_count(); ++k) {
        std::memset(rgb.data.data() + 3 * k, img.data[k], 3);
    }
    return rgb;
}

Mask extract_silhouette(const Image& img, std::uint8_t bg_low, std::uint8_t bg_high) {
    if (bg_low > bg_high) {
        throw ArgumentError(fmt::format("background range [{}, {}] is empty", bg_low, bg_high));
    }
    const Image gray = to_gray(img);
    Mask mask(img.width, img.height);
    for (std::size_t k = 0; k < gray.data.size(); ++k) {
        const auto v = gray.data[k];
        mask.bits[k] = (v < bg_low || v > bg_high) ? 1 : 0;
    }
    return mask;
}

Mask binarize(const FloatRaster& soft, double eta) {
    Mask mask(soft.width, soft.height);
    for (std::size_t k = 0; k < soft.data.size(); ++k) mask.bits[k] = soft.data[k] >= eta ? 1 : 0;
    return mask;
}

Mask translate_mask(const Mask& fg_mask, int base_width, int base_height, Offset offset) {
    Mask out(base_width, base_height);
    for (int y = 0; y < fg_mask.height; ++y) {
        const int by = y + offset.y;
        if (by < 0 || by >= base_height) continue;
        for (int x = 0; x < fg_mask.width; ++x) {
            const int bx = x + offset.x;
            if (bx < 0 || bx >= base_width) continue;
            if (fg_mask.at(x, y)) out.set(bx, by, true);
        }
    }
    return out;
}

CompositeResult composite(const Image& base, const Mask& base_mask, const Image& fg,
                          const Mask& fg_mask, Offset offset) {
    if (base.channels != fg.channels) {
        throw DataError(fmt::format("composite: channel mismatch ({} vs {})", base.channels,
                                    fg.channels));
    }
    if (base_mask.width != base.width || base_mask.height != base.height) {
        throw DataError("composite: base mask does not match base image");
    }
    if (fg_mask.width != fg.width || fg_mask.height != fg.height) {
        throw DataError("composite: foreground mask does not match foreground image");
    }
    CompositeResult result{base, Mask(base.width, base.height)};
    const int c = base.channels;
    for (int y = 0; y < fg.height; ++y) {
        const int by = y + offset.y;
        if (by < 0 || by >= base.height) continue;
        for (int x = 0; x < fg.width; ++x) {
            const int bx = x + offset.x;
            if (bx < 0 || bx >= base.width || !fg_mask.at(x, y)) continue;
            std::memcpy(result.image.pixel(bx, by), fg.pixel(x, y), static_cast<std::size_t>(c));
            if (base_mask.at(bx, by)) result.occluded_region.set(bx, by, true);
        }
    }
    return result;
}

Mask mask_and(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "mask_and");
    Mask out(a.width, a.height);
    for (std::size_t k = 0; k < a.bits.size(); ++k) out.bits[k] = a.bits[k] & b.bits[k];
    return out;
}

Mask mask_or(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "mask_or");
    Mask out(a.width, a.height);
    for (std::size_t k = 0; k < a.bits.size(); ++k) out.bits[k] = a.bits[k] | b.bits[k];
    return out;
}

Mask mask_and_not(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "mask_and_not");
    Mask out(a.width, a.height);
    for (std::size_t k = 0; k < a.bits.size(); ++k) out.bits[k] = a.bits[k] & (b.bits[k] ^ 1);
    return out;
}

}  // namespace occlukit::maskops
