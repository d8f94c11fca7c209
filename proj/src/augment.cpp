// SPDX-License-Identifier: Apache-2.0
#include "occlukit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "occlukit/io.hpp"
#include "occlukit/rng.hpp"

namespace occlukit::augment {

void OccluderLibrary::validate() const {
    std::set<std::string> ids;
    for (const auto& e : entries) {
        if (!ids.insert(e.record_id).second) {
            throw DataError(fmt::format("duplicate occluder record ID '{}'", e.record_id));
        }
        if (e.mask.width != e.image.width || e.mask.height != e.image.height) {
            throw DataError(fmt::format("occluder '{}': mask and image sizes differ", e.record_id));
        }
        if (!(e.focal_mm >= kMinFocalMm && e.focal_mm <= kMaxFocalMm)) {
            throw DataError(fmt::format("occluder '{}': focal length {}mm outside [{}, {}]",
                                        e.record_id, e.focal_mm, kMinFocalMm, kMaxFocalMm));
        }
    }
}

const OccluderEntry* OccluderLibrary::find(const std::string& record_id) const {
    for (const auto& e : entries) {
        if (e.record_id == record_id) return &e;
    }
    return nullptr;
}

std::pair<int, int> scaled_size(int width, int height, double scale) {
    return {std::max(1, static_cast<int>(std::lround(width * scale))),
            std::max(1, static_cast<int>(std::lround(height * scale)))};
}

OccluderPlan sample_plan(std::uint64_t seed, double target_focal_mm, const OccluderLibrary& lib,
                         FrameSize frame, double focal_tol_mm) {
    if (frame.width < 1 || frame.height < 1) throw ArgumentError("frame must be at least 1x1");
    if (!(focal_tol_mm >= 0.0)) throw ArgumentError("focal tolerance must be non-negative");

    Rng rng(seed);
    OccluderPlan plan;
    plan.seed = seed;
    plan.requested = static_cast<int>(rng.below(kMaxOccluders + 1));

    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < lib.entries.size(); ++k) {
        if (std::abs(lib.entries[k].focal_mm - target_focal_mm) <= focal_tol_mm) {
            candidates.push_back(k);
        }
    }
    if (candidates.empty()) {
        plan.no_candidates = true;
        return plan;
    }

    // Draw without replacement until the candidate pool runs dry.
    for (int p = 0; p < plan.requested && !candidates.empty(); ++p) {
        const auto slot = static_cast<std::size_t>(rng.below(candidates.size()));
        const auto& entry = lib.entries[candidates[slot]];
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(slot));

        OccluderPick pick;
        pick.record_id = entry.record_id;
        pick.scale = rng.uniform(kMinScale, kMaxScale);
        const auto [w, h] = scaled_size(entry.image.width, entry.image.height, pick.scale);
        // Center (offset + w/2) must land on a pixel of the frame.
        pick.offset.x = static_cast<int>(rng.between(-(w / 2), frame.width - 1 - w / 2));
        pick.offset.y = static_cast<int>(rng.between(-(h / 2), frame.height - 1 - h / 2));
        plan.picks.push_back(std::move(pick));
    }
    return plan;
}

Image resize_nearest(const Image& img, int width, int height) {
    Image out(width, height, img.channels);
    const double sx = static_cast<double>(img.width) / width;
    const double sy = static_cast<double>(img.height) / height;
    for (int y = 0; y < height; ++y) {
        const int src_y = std::min(img.height - 1, static_cast<int>((y + 0.5) * sy));
        for (int x = 0; x < width; ++x) {
            const int src_x = std::min(img.width - 1, static_cast<int>((x + 0.5) * sx));
            std::memcpy(out.pixel(x, y), img.pixel(src_x, src_y),
                        static_cast<std::size_t>(img.channels));
        }
    }
    return out;
}

Mask resize_nearest(const Mask& mask, int width, int height) {
    Mask out(width, height);
    const double sx = static_cast<double>(mask.width) / width;
    const double sy = static_cast<double>(mask.height) / height;
    for (int y = 0; y < height; ++y) {
        const int src_y = std::min(mask.height - 1, static_cast<int>((y + 0.5) * sy));
        for (int x = 0; x < width; ++x) {
            const int src_x = std::min(mask.width - 1, static_cast<int>((x + 0.5) * sx));
            out.set(x, y, mask.at(src_x, src_y));
        }
    }
    return out;
}

AugmentedSample apply_copy_paste(const AugmentSample& sample, const OccluderPlan& plan,
                                 const OccluderLibrary& lib) {
    if (sample.mask.width != sample.image.width || sample.mask.height != sample.image.height) {
        throw DataError("sample mask and image sizes differ");
    }
    AugmentedSample out{sample.image, sample.mask, Mask(sample.image.width, sample.image.height)};
    for (const auto& pick : plan.picks) {
        const OccluderEntry* entry = lib.find(pick.record_id);
        if (!entry) {
            throw DataError(fmt::format("occluder '{}' is not in the library", pick.record_id));
        }
        const auto [w, h] = scaled_size(entry->image.width, entry->image.height, pick.scale);
        const Image occ_img = resize_nearest(entry->image, w, h);
        const Mask occ_mask = resize_nearest(entry->mask, w, h);
        auto comp = maskops::composite(out.image, sample.mask, occ_img, occ_mask, pick.offset);
        out.image = std::move(comp.image);
        out.occluder_mask = maskops::mask_or(
                out.occluder_mask,
                maskops::translate_mask(occ_mask, sample.image.width, sample.image.height, pick.offset));
    }
    out.visible_mask = maskops::mask_and_not(sample.mask, out.occluder_mask);
    return out;
}

OccluderLibrary read_library(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
    const auto entries = j.is_object() && j.contains("entries") ? j.at("entries") : j;
    if (!entries.is_array()) throw DataError(fmt::format("{}: expected an array of occluders", path.string()));
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_relative() ? base / fp : fp;
    };
    OccluderLibrary lib;
    for (const auto& e : entries) {
        try {
            OccluderEntry entry;
            entry.record_id = e.at("record_id").get<std::string>();
            entry.focal_mm = e.at("focal_mm").get<double>();
            entry.image = io::read_image(resolve(e.at("image_path").get<std::string>()));
            entry.mask = io::read_mask_pgm(resolve(e.at("mask_path").get<std::string>()));
            lib.entries.push_back(std::move(entry));
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(fmt::format("{}: bad occluder entry: {}", path.string(), ex.what()));
        }
    }
    lib.validate();
    return lib;
}

}  // namespace occlukit::augment
