// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "occlukit/raster.hpp"
#include "occlukit/types.hpp"

/// Readers and writers for the on-disk formats: PFM (float rasters),
/// PGM/PPM/PNG (masks and images) and PLY (meshes and point clouds).
///
/// Every reader throws DataError with the file name and the offending field or
/// offset. Every `encode_*` has a matching `decode_*` so that byte payloads can
/// travel over the wire without touching the filesystem.
namespace occlukit::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view bytes);

// --- PFM ------------------------------------------------------------------

/// Grayscale Portable Float Map ("Pf"). Both endianness conventions are read;
/// rows come back top-to-bottom. NaN/Inf samples are rejected.
FloatRaster decode_pfm(std::string_view bytes, std::string_view name = "<memory>");
FloatRaster read_pfm(const fs::path& path);

/// Writes little-endian (scale -1.0), rows bottom-to-top per the format.
std::string encode_pfm(const FloatRaster& raster);
void write_pfm(const FloatRaster& raster, const fs::path& path);

// --- PNM ------------------------------------------------------------------

/// P2/P5 with maxval 255, binarized at > 127.
Mask decode_mask_pgm(std::string_view bytes, std::string_view name = "<memory>");
Mask read_mask_pgm(const fs::path& path);
/// Binary P5 with 0 / 255 samples.
std::string encode_mask_pgm(const Mask& mask);
void write_mask_pgm(const Mask& mask, const fs::path& path);

/// P2/P3/P5/P6 with maxval 255.
Image decode_pnm(std::string_view bytes, std::string_view name = "<memory>");
std::string encode_pnm(const Image& image);

// --- PNG ------------------------------------------------------------------

Image decode_png(std::string_view bytes, std::string_view name = "<memory>");
std::string encode_png(const Image& image);

/// Reads PNG, PPM or PGM, dispatching on the file's magic bytes.
Image read_image(const fs::path& path);
/// Writes PNG unless the extension is .ppm/.pgm.
void write_image(const Image& image, const fs::path& path);

// --- PLY ------------------------------------------------------------------

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// A PLY with a face element is a mesh; one with only vertices is a cloud.
using PlyData = std::variant<TriangleMesh, PointCloud>;

PlyData decode_ply(std::string_view bytes, std::string_view name = "<memory>");
PlyData read_ply(const fs::path& path);
/// Vertices of either variant, for consumers that only need points.
PointCloud read_ply_points(const fs::path& path);

std::string encode_ply(const TriangleMesh& mesh, PlyFormat format);
std::string encode_ply(const PointCloud& cloud, PlyFormat format);
void write_ply(const TriangleMesh& mesh, const fs::path& path,
               PlyFormat format = PlyFormat::kBinaryLittleEndian);
void write_ply(const PointCloud& cloud, const fs::path& path,
               PlyFormat format = PlyFormat::kBinaryLittleEndian);

}  // namespace occlukit::io
