// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "occlukit/camera.hpp"
#include "occlukit/raster.hpp"
#include "occlukit/types.hpp"

/// Framework-free reference kernels for the training losses and the FiLM
/// feature modulation. No gradients; these exist to cross-check training code.
namespace occlukit::loss {

/// Row-major h x w x c feature map, channels fastest.
struct FeatureMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int h, int w, int c, double fill = 0.0);

    double& at(int i, int j, int c) {
        return data[(static_cast<std::size_t>(i) * width + j) * channels + c];
    }
    [[nodiscard]] double at(int i, int j, int c) const {
        return data[(static_cast<std::size_t>(i) * width + j) * channels + c];
    }
};

struct FilmParams {
    std::vector<double> gamma;
    std::vector<double> beta;
};

/// out(i, j, c) = (1 + gamma_c) x(i, j, c) + beta_c.
FeatureMap film_modulate(const FeatureMap& x, const FilmParams& p);
/// Inverse of film_modulate; requires gamma_c != -1 for every channel.
FeatureMap film_demodulate(const FeatureMap& y, const FilmParams& p);

/// How the prediction is fitted to the target before taking the MAE.
enum class SsiAlignment {
    /// (s, t) minimizing mean |s * pred + t - target| over the region. The
    /// objective is convex; s is found by golden-section search over the
    /// profile min_t (t = median residual), to ~1e-13 relative precision.
    kLeastAbsolute,
    /// Both maps shifted by their median and divided by their mean absolute
    /// deviation from it, then compared.
    kMedianMad,
    /// Closed-form least-squares (s, t), then MAE.
    kLeastSquares,
};

struct SsiResult {
    double loss = 0.0;
    double scale = 1.0;  ///< applied to pred (kMedianMad: ratio of deviations)
    double shift = 0.0;
};

/// Scale- and shift-invariant MAE over the region. Throws DataError when the
/// region has fewer than 2 pixels or a constant target.
SsiResult ssi_mae(const FloatRaster& pred, const FloatRaster& target, const Mask& region,
                  SsiAlignment alignment = SsiAlignment::kLeastAbsolute);
double ssi_mae_loss(const FloatRaster& pred, const FloatRaster& target, const Mask& region,
                    SsiAlignment alignment = SsiAlignment::kLeastAbsolute);
/// Same kernel over plain value arrays.
SsiResult ssi_mae(std::span<const double> pred, std::span<const double> target,
                  SsiAlignment alignment = SsiAlignment::kLeastAbsolute);

inline constexpr double kProbabilityClamp = 1e-7;

/// Mean of -[y log p + (1 - y) log(1 - p)], p clamped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> probs, std::span<const std::uint8_t> labels);
double bce_loss(const FloatRaster& probs, const Mask& target);

/// Mean squared Euclidean error over pixels valid in both maps.
double shape_mse_loss(const camera::PointMap& pred, const camera::PointMap& gt);

struct LossWeights {
    double camera = 10.0;
    double depth = 1.0;
    double depth_aux = 0.1;
    double mask_vis = 1.0;
    double mask_occ = 1.0;
    double occupancy = 1.0;

    void validate() const;
};

/// Component names accepted by total_loss.
inline constexpr const char* kCameraLoss = "camera";
inline constexpr const char* kDepthLoss = "depth";
inline constexpr const char* kDepthAuxLoss = "depth_aux";
inline constexpr const char* kMaskVisLoss = "mask_vis";
inline constexpr const char* kMaskOccLoss = "mask_occ";
inline constexpr const char* kOccupancyLoss = "occupancy";

/// Pixel-level pre-training objective, plus the occupancy term when
/// include_occupancy is set. Throws ArgumentError naming a missing component.
double total_loss(const std::map<std::string, double>& components, const LossWeights& w = {},
                  bool include_occupancy = true);

inline constexpr std::size_t kDefaultQueryPoints = 4096;

/// Uniform points in the box; deterministic given the seed.
std::vector<Vec3> sample_query_points(std::size_t n, const Bounds& bounds, std::uint64_t seed);

}  // namespace occlukit::loss
