// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "occlukit/maskops.hpp"
#include "occlukit/raster.hpp"

/// Seeded Copy-Paste occluders: planning (which library objects, how large,
/// where) and application onto a training sample.
namespace occlukit::augment {

inline constexpr int kMaxOccluders = 2;
inline constexpr double kMinScale = 0.4;
inline constexpr double kMaxScale = 0.6;
inline constexpr double kMinFocalMm = 30.0;
inline constexpr double kMaxFocalMm = 70.0;
inline constexpr double kDefaultFocalTolMm = 10.0;

struct OccluderEntry {
    std::string record_id;
    Image image;
    Mask mask;
    double focal_mm = 50.0;
};

struct OccluderLibrary {
    std::vector<OccluderEntry> entries;

    /// Throws DataError on duplicate IDs, mask/image size mismatch or a focal
    /// length outside the rendering range.
    void validate() const;
    [[nodiscard]] const OccluderEntry* find(const std::string& record_id) const;
};

struct OccluderPick {
    std::string record_id;
    double scale = 0.5;
    maskops::Offset offset;  ///< top-left of the resized occluder in the sample frame

    bool operator==(const OccluderPick&) const = default;
};

struct OccluderPlan {
    std::vector<OccluderPick> picks;
    std::uint64_t seed = 0;
    /// Count the RNG asked for before candidate filtering.
    int requested = 0;
    /// Set when no library entry was focal-compatible (picks forced empty).
    bool no_candidates = false;

    bool operator==(const OccluderPlan&) const = default;
};

/// Target frame the occluders are placed into.
struct FrameSize {
    int width = 224;
    int height = 224;
};

/// Count uniform over {0, 1, 2}; candidates are entries within focal_tol_mm
/// of the target; distinct picks while candidates last; scale uniform in
/// [0.4, 0.6]; offset uniform over positions keeping the occluder's center
/// inside the frame.
OccluderPlan sample_plan(std::uint64_t seed, double target_focal_mm, const OccluderLibrary& lib,
                         FrameSize frame, double focal_tol_mm = kDefaultFocalTolMm);

/// Size of an occluder after nearest-neighbor resizing by `scale`.
std::pair<int, int> scaled_size(int width, int height, double scale);

/// Nearest-neighbor resize (source pixel = floor((dst + 0.5) / scale)).
Image resize_nearest(const Image& img, int width, int height);
Mask resize_nearest(const Mask& mask, int width, int height);

struct AugmentSample {
    Image image;
    Mask mask;  ///< object mask before augmentation
};

struct AugmentedSample {
    Image image;
    Mask visible_mask;   ///< original mask minus occluder_mask
    Mask occluder_mask;  ///< union of pasted occluder masks
};

/// Pastes the plan's occluders in pick order. Throws DataError on a record ID
/// missing from the library.
AugmentedSample apply_copy_paste(const AugmentSample& sample, const OccluderPlan& plan,
                                 const OccluderLibrary& lib);

/// Loads a library description: JSON array of {record_id, image_path,
/// mask_path, focal_mm}; relative paths resolve against the file's directory.
OccluderLibrary read_library(const std::filesystem::path& path);

}  // namespace occlukit::augment
