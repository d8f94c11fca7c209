// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "header_scanner.hpp"
#include "occlukit/io.hpp"

namespace occlukit::io {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open '{}' for reading", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

// --- PFM ------------------------------------------------------------------

FloatRaster decode_pfm(std::string_view bytes, std::string_view name) {
    detail::HeaderScanner scan(bytes, name);
    const auto magic = scan.token("magic");
    if (magic == "PF") throw DataError(fmt::format("{}: color PFM (PF) is not supported", name));
    if (magic != "Pf") throw DataError(fmt::format("{}: bad PFM magic '{}'", name, magic));
    const int width = scan.integer("width");
    const int height = scan.integer("height");
    const double scale = scan.real("scale");
    scan.single_whitespace();
    if (width < 1 || height < 1) {
        throw DataError(fmt::format("{}: bad PFM dimensions {}x{}", name, width, height));
    }
    if (scale == 0.0 || !std::isfinite(scale)) {
        throw DataError(fmt::format("{}: bad PFM scale {}", name, scale));
    }
    const bool little = scale < 0.0;
    const std::size_t count = static_cast<std::size_t>(width) * height;
    const std::size_t data_offset = scan.position();
    if (bytes.size() - data_offset < count * 4) {
        throw DataError(fmt::format("{}: truncated PFM, need {} data bytes, have {}", name,
                                    count * 4, bytes.size() - data_offset));
    }
    const bool swap = little != (std::endian::native == std::endian::little);

    std::vector<float> data(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::uint32_t word;
        std::memcpy(&word, bytes.data() + data_offset + 4 * k, 4);
        if (swap) word = __builtin_bswap32(word);
        const float v = std::bit_cast<float>(word);
        if (!std::isfinite(v)) {
            throw DataError(fmt::format("{}: non-finite sample at index {} (byte offset {})",
                                        name, k, data_offset + 4 * k));
        }
        // File rows run bottom-to-top.
        const std::size_t file_row = k / width;
        const std::size_t col = k % width;
        data[(height - 1 - file_row) * width + col] = v;
    }
    return FloatRaster(width, height, std::move(data));
}

FloatRaster read_pfm(const fs::path& path) { return decode_pfm(read_file(path), path.string()); }

std::string encode_pfm(const FloatRaster& raster) {
    std::string out = fmt::format("Pf\n{} {}\n-1.0\n", raster.width, raster.height);
    const std::size_t header = out.size();
    out.resize(header + raster.size() * 4);
    std::size_t k = 0;
    for (int row = raster.height - 1; row >= 0; --row) {
        for (int col = 0; col < raster.width; ++col, ++k) {
            auto word = std::bit_cast<std::uint32_t>(raster.at(col, row));
            if constexpr (std::endian::native != std::endian::little) word = __builtin_bswap32(word);
            std::memcpy(out.data() + header + 4 * k, &word, 4);
        }
    }
    return out;
}

void write_pfm(const FloatRaster& raster, const fs::path& path) {
    write_file(path, encode_pfm(raster));
}

// --- PNM ------------------------------------------------------------------

Image decode_pnm(std::string_view bytes, std::string_view name) {
    detail::HeaderScanner scan(bytes, name);
    const auto magic = scan.token("magic");
    int channels;
    bool ascii;
    if (magic == "P5") {
        channels = 1, ascii = false;
    } else if (magic == "P6") {
        channels = 3, ascii = false;
    } else if (magic == "P2") {
        channels = 1, ascii = true;
    } else if (magic == "P3") {
        channels = 3, ascii = true;
    } else {
        throw DataError(fmt::format("{}: unsupported PNM magic '{}'", name, magic));
    }
    const int width = scan.integer("width");
    const int height = scan.integer("height");
    const int maxval = scan.integer("maxval");
    if (width < 1 || height < 1) {
        throw DataError(fmt::format("{}: bad dimensions {}x{}", name, width, height));
    }
    if (maxval != 255) throw DataError(fmt::format("{}: maxval {} unsupported (need 255)", name, maxval));

    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    std::vector<std::uint8_t> data(count);
    if (ascii) {
        for (std::size_t k = 0; k < count; ++k) {
            const int v = scan.integer("sample");
            if (v < 0 || v > 255) throw DataError(fmt::format("{}: sample {} out of range", name, k));
            data[k] = static_cast<std::uint8_t>(v);
        }
    } else {
        scan.single_whitespace();
        const std::size_t off = scan.position();
        if (bytes.size() - off < count) {
            throw DataError(fmt::format("{}: truncated raster, need {} bytes, have {}", name, count,
                                        bytes.size() - off));
        }
        std::memcpy(data.data(), bytes.data() + off, count);
    }
    return Image(width, height, channels, std::move(data));
}

std::string encode_pnm(const Image& image) {
    std::string out = fmt::format("{}\n{} {}\n255\n", image.channels == 1 ? "P5" : "P6",
                                  image.width, image.height);
    out.append(reinterpret_cast<const char*>(image.data.data()), image.data.size());
    return out;
}

Mask decode_mask_pgm(std::string_view bytes, std::string_view name) {
    const Image img = decode_pnm(bytes, name);
    if (img.channels != 1) throw DataError(fmt::format("{}: mask must be a grayscale PGM", name));
    Mask mask(img.width, img.height);
    for (std::size_t k = 0; k < mask.bits.size(); ++k) mask.bits[k] = img.data[k] > 127 ? 1 : 0;
    return mask;
}

Mask read_mask_pgm(const fs::path& path) {
    return decode_mask_pgm(read_file(path), path.string());
}

std::string encode_mask_pgm(const Mask& mask) {
    Image img(mask.width, mask.height, 1);
    for (std::size_t k = 0; k < mask.bits.size(); ++k) img.data[k] = mask.bits[k] ? 255 : 0;
    return encode_pnm(img);
}

void write_mask_pgm(const Mask& mask, const fs::path& path) {
    write_file(path, encode_mask_pgm(mask));
}

Image read_image(const fs::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() >= 8 && bytes.compare(0, 4, "\x89PNG") == 0) {
        return decode_png(bytes, path.string());
    }
    if (!bytes.empty() && bytes[0] == 'P') return decode_pnm(bytes, path.string());
    throw DataError(fmt::format("{}: unrecognized image format", path.string()));
}

void write_image(const Image& image, const fs::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".ppm" || ext == ".pgm") {
        write_file(path, encode_pnm(image));
    } else {
        write_file(path, encode_png(image));
    }
}

}  // namespace occlukit::io
