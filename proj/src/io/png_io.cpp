// SPDX-License-Identifier: Apache-2.0
#include <cstring>

#include <fmt/core.h>
#include <png.h>

#include "occlukit/io.hpp"

namespace occlukit::io {

Image decode_png(std::string_view bytes, std::string_view name) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw DataError(fmt::format("{}: {}", name, img.message));
    }
    const bool gray = (img.format & PNG_FORMAT_FLAG_COLOR) == 0;
    img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int channels = gray ? 1 : 3;
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(img));
    // Transparent pixels are composited over white, matching the near-white
    // backgrounds the silhouette extractor expects.
    png_color background{255, 255, 255};
    if (!png_image_finish_read(&img, &background, data.data(), 0, nullptr)) {
        png_image_free(&img);
        throw DataError(fmt::format("{}: {}", name, img.message));
    }
    return Image(static_cast<int>(img.width), static_cast<int>(img.height), channels,
                 std::move(data));
}

std::string encode_png(const Image& image) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(img, size, 0, image.data.data(), 0, nullptr)) {
        throw DataError(fmt::format("png encode failed: {}", img.message));
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.data.data(), 0, nullptr)) {
        throw DataError(fmt::format("png encode failed: {}", img.message));
    }
    out.resize(size);
    return out;
}

}  // namespace occlukit::io
