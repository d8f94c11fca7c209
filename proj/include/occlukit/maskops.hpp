// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "occlukit/raster.hpp"

namespace occlukit::maskops {

/// |a ∩ b| / |a ∪ b|; two empty masks give 1.
double iou(const Mask& a, const Mask& b);

/// Integer-rounded Rec.601 luma of an RGB triple.
std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Grayscale copy of an image (identity for single-channel input).
Image to_gray(const Image& img);
/// Three-channel copy (gray replicated; identity for RGB input).
Image to_rgb(const Image& img);

/// Foreground = pixels whose luma lies outside [bg_low, bg_high].
Mask extract_silhouette(const Image& img, std::uint8_t bg_low = 250, std::uint8_t bg_high = 255);

/// bit = value >= eta.
Mask binarize(const FloatRaster& soft, double eta);

struct Offset {
    int x = 0;
    int y = 0;

    bool operator==(const Offset&) const = default;
};

struct CompositeResult {
    Image image;
    /// Part of base_mask hidden by the pasted foreground.
    Mask occluded_region;
};

/// Pastes fg's masked pixels onto base with fg's top-left corner at `offset`.
/// Pixels falling outside the base frame are clipped.
CompositeResult composite(const Image& base, const Mask& base_mask, const Image& fg,
                          const Mask& fg_mask, Offset offset);

/// fg_mask translated by offset into a base-sized frame, clipped.
Mask translate_mask(const Mask& fg_mask, int base_width, int base_height, Offset offset);

Mask mask_and(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);
/// a minus b.
Mask mask_and_not(const Mask& a, const Mask& b);

}  // namespace occlukit::maskops
