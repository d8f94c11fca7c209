// SPDX-License-Identifier: Apache-2.0
#include "occlukit/losskit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "occlukit/rng.hpp"

namespace occlukit::loss {

FeatureMap::FeatureMap(int h, int w, int c, double fill) : height(h), width(w), channels(c) {
    if (h < 1 || w < 1 || c < 1) throw ArgumentError("feature map dimensions must be >= 1");
    data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

namespace {

void check_film(const FeatureMap& x, const FilmParams& p) {
    const auto c = static_cast<std::size_t>(x.channels);
    if (p.gamma.size() != c || p.beta.size() != c) {
        throw ArgumentError(fmt::format("FiLM parameters have {}/{} channels, feature map has {}",
                                        p.gamma.size(), p.beta.size(), c));
    }
    if (x.data.size() != static_cast<std::size_t>(x.height) * x.width * c) {
        throw ArgumentError("feature map data length does not match its shape");
    }
}

}  // namespace

FeatureMap film_modulate(const FeatureMap& x, const FilmParams& p) {
    check_film(x, p);
    FeatureMap out = x;
    const auto c = static_cast<std::size_t>(x.channels);
    for (std::size_t k = 0; k < out.data.size(); ++k) {
        const auto ch = k % c;
        out.data[k] = (1.0 + p.gamma[ch]) * x.data[k] + p.beta[ch];
    }
    return out;
}

FeatureMap film_demodulate(const FeatureMap& y, const FilmParams& p) {
    check_film(y, p);
    for (double g : p.gamma) {
        if (1.0 + g == 0.0) throw ArgumentError("FiLM with gamma = -1 is not invertible");
    }
    FeatureMap out = y;
    const auto c = static_cast<std::size_t>(y.channels);
    for (std::size_t k = 0; k < out.data.size(); ++k) {
        const auto ch = k % c;
        out.data[k] = (y.data[k] - p.beta[ch]) / (1.0 + p.gamma[ch]);
    }
    return out;
}

// --- scale/shift-invariant MAE ------------------------------------------------

namespace {

double median_of(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

/// Neumaier summation keeps hi + lo equal to the exact sum for the sizes met
/// here; dividing the pair with an fma remainder then rounds the mean once, so
/// n equal terms average back to exactly that term.
struct CompensatedMean {
    double hi = 0.0;
    double lo = 0.0;
    std::size_t n = 0;

    void add(double v) {
        const double s = hi + v;
        lo += std::abs(hi) >= std::abs(v) ? (hi - s) + v : (v - s) + hi;
        hi = s;
        ++n;
    }
    [[nodiscard]] double mean() const {
        const auto d = static_cast<double>(n);
        const double q = hi / d;
        const double r = std::fma(-q, d, hi);
        return q + (r + lo) / d;
    }
};

double mean_abs_error(std::span<const double> pred, std::span<const double> target, double s,
                      double t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) acc += std::abs(s * pred[k] + t - target[k]);
    return acc / static_cast<double>(pred.size());
}

/// Profile objective: best shift for a given scale, and the resulting MAE.
struct Profile {
    std::span<const double> pred;
    std::span<const double> target;
    mutable std::vector<double> residual;

    std::pair<double, double> operator()(double s) const {
        residual.resize(pred.size());
        for (std::size_t k = 0; k < pred.size(); ++k) residual[k] = target[k] - s * pred[k];
        const double t = median_of(residual);
        return {mean_abs_error(pred, target, s, t), t};
    }
};

SsiResult fit_least_absolute(std::span<const double> pred, std::span<const double> target) {
    const Profile f{pred, target, {}};

    // Start from the least-squares slope, then expand a bracket downhill.
    double mp = 0.0, mt = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        mp += pred[k];
        mt += target[k];
    }
    mp /= pred.size();
    mt /= pred.size();
    double cov = 0.0, var = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        cov += (pred[k] - mp) * (target[k] - mt);
        var += (pred[k] - mp) * (pred[k] - mp);
    }
    if (var == 0.0) {
        // Constant prediction: scale is irrelevant, shift = median target.
        const auto [loss, t] = f(0.0);
        return {loss, 0.0, t};
    }
    const double s0 = cov / var;
    double h = std::max(std::abs(s0), 1e-3) * 0.25;

    // Walk the center downhill until both bracket ends sit above it; by
    // convexity the minimizer then lies inside [lo, hi].
    double mid = s0;
    double lo = mid - h, hi = mid + h;
    double f_lo = f(lo).first, f_mid = f(mid).first, f_hi = f(hi).first;
    for (int guard = 0; f_lo < f_mid && guard < 2000; ++guard) {
        hi = mid, f_hi = f_mid;
        mid = lo, f_mid = f_lo;
        h *= 2.0;
        lo = mid - h, f_lo = f(lo).first;
    }
    for (int guard = 0; f_hi < f_mid && guard < 2000; ++guard) {
        lo = mid, f_lo = f_mid;
        mid = hi, f_mid = f_hi;
        h *= 2.0;
        hi = mid + h, f_hi = f(hi).first;
    }

    // Golden-section search on the convex profile.
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c).first, fd = f(d).first;
    for (int it = 0; it < 400 && (b - a) > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c).first;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d).first;
        }
    }
    double s = fc <= fd ? c : d;
    auto [loss, t] = f(s);

    // The minimum sits at a vertex where two residuals both equal the shift.
    // Snap to the vertex through the points closest to that line so exact fits
    // come out exactly zero instead of at the search's rounding floor.
    std::vector<std::size_t> order(pred.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t near = std::min<std::size_t>(4, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(near), order.end(),
                      [&, s = s, t = t](std::size_t i, std::size_t j) {
                          return std::abs(target[i] - s * pred[i] - t) <
                                 std::abs(target[j] - s * pred[j] - t);
                      });
    for (std::size_t a_idx = 0; a_idx < near; ++a_idx) {
        for (std::size_t b_idx = a_idx + 1; b_idx < near; ++b_idx) {
            const std::size_t i = order[a_idx], j = order[b_idx];
            if (pred[i] == pred[j]) continue;
            const double vertex = (target[i] - target[j]) / (pred[i] - pred[j]);
            const auto [vl, vt] = f(vertex);
            if (vl <= loss) {
                loss = vl;
                s = vertex;
                t = vt;
            }
        }
    }
    return {loss, s, t};
}

SsiResult fit_median_mad(std::span<const double> pred, std::span<const double> target) {
    auto center_spread = [](std::span<const double> v) {
        const double m = median_of(std::vector<double>(v.begin(), v.end()));
        double dev = 0.0;
        for (double x : v) dev += std::abs(x - m);
        return std::pair{m, dev / static_cast<double>(v.size())};
    };
    const auto [tp, sp] = center_spread(pred);
    const auto [tt, st] = center_spread(target);
    const double s = sp > 0.0 ? st / sp : 0.0;
    const double t = tt - s * tp;
    return {mean_abs_error(pred, target, s, t), s, t};
}

SsiResult fit_least_squares(std::span<const double> pred, std::span<const double> target) {
    const double n = static_cast<double>(pred.size());
    double mp = 0.0, mt = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        mp += pred[k];
        mt += target[k];
    }
    mp /= n;
    mt /= n;
    double cov = 0.0, var = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        cov += (pred[k] - mp) * (target[k] - mt);
        var += (pred[k] - mp) * (pred[k] - mp);
    }
    const double s = var > 0.0 ? cov / var : 0.0;
    const double t = mt - s * mp;
    return {mean_abs_error(pred, target, s, t), s, t};
}

}  // namespace

SsiResult ssi_mae(std::span<const double> pred, std::span<const double> target,
                  SsiAlignment alignment) {
    if (pred.size() != target.size()) throw ArgumentError("prediction and target sizes differ");
    if (pred.size() < 2) throw DataError("SSI loss needs at least 2 region pixels");
    const auto [mn, mx] = std::minmax_element(target.begin(), target.end());
    if (*mn == *mx) throw DataError("SSI loss is undefined for a constant target over the region");
    for (std::size_t k = 0; k < pred.size(); ++k) {
        if (!std::isfinite(pred[k]) || !std::isfinite(target[k])) {
            throw DataError(fmt::format("non-finite value at region index {}", k));
        }
    }
    switch (alignment) {
        case SsiAlignment::kLeastAbsolute: return fit_least_absolute(pred, target);
        case SsiAlignment::kMedianMad: return fit_median_mad(pred, target);
        case SsiAlignment::kLeastSquares: return fit_least_squares(pred, target);
    }
    return {};
}

SsiResult ssi_mae(const FloatRaster& pred, const FloatRaster& target, const Mask& region,
                  SsiAlignment alignment) {
    if (pred.width != target.width || pred.height != target.height || region.width != pred.width ||
        region.height != pred.height) {
        throw ArgumentError("SSI loss inputs must share one resolution");
    }
    std::vector<double> p, t;
    p.reserve(region.count());
    t.reserve(region.count());
    for (std::size_t k = 0; k < region.bits.size(); ++k) {
        if (!region.bits[k]) continue;
        p.push_back(pred.data[k]);
        t.push_back(target.data[k]);
    }
    return ssi_mae(p, t, alignment);
}

double ssi_mae_loss(const FloatRaster& pred, const FloatRaster& target, const Mask& region,
                    SsiAlignment alignment) {
    return ssi_mae(pred, target, region, alignment).loss;
}

// --- BCE / MSE --------------------------------------------------------------

double bce_loss(std::span<const double> probs, std::span<const std::uint8_t> labels) {
    if (probs.size() != labels.size()) {
        throw ArgumentError(fmt::format("BCE: {} predictions vs {} labels", probs.size(),
                                        labels.size()));
    }
    if (probs.empty()) throw ArgumentError("BCE of an empty set is undefined");
    CompensatedMean acc;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        const double p = std::clamp(probs[k], kProbabilityClamp, 1.0 - kProbabilityClamp);
        acc.add(labels[k] ? -std::log(p) : -std::log(1.0 - p));
    }
    return acc.mean();
}

double bce_loss(const FloatRaster& probs, const Mask& target) {
    if (probs.width != target.width || probs.height != target.height) {
        throw ArgumentError("BCE: prediction and mask resolutions differ");
    }
    std::vector<double> p(probs.data.begin(), probs.data.end());
    return bce_loss(p, target.bits);
}

double shape_mse_loss(const camera::PointMap& pred, const camera::PointMap& gt) {
    if (pred.width != gt.width || pred.height != gt.height) {
        throw ArgumentError("shape MSE: point maps differ in resolution");
    }
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < pred.points.size(); ++k) {
        if (!pred.valid.bits[k] || !gt.valid.bits[k]) continue;
        acc += (pred.points[k] - gt.points[k]).squaredNorm();
        ++n;
    }
    if (n == 0) throw DataError("shape MSE: no pixel is valid in both maps");
    return acc / static_cast<double>(n);
}

// --- aggregation --------------------------------------------------------------

void LossWeights::validate() const {
    for (double w : {camera, depth, depth_aux, mask_vis, mask_occ, occupancy}) {
        if (!(w >= 0.0)) throw ArgumentError("loss weights must be non-negative");
    }
}

double total_loss(const std::map<std::string, double>& components, const LossWeights& w,
                  bool include_occupancy) {
    w.validate();
    auto get = [&](const char* name) {
        const auto it = components.find(name);
        if (it == components.end()) {
            throw ArgumentError(fmt::format("missing loss component '{}'", name));
        }
        return it->second;
    };
    double total = w.camera * get(kCameraLoss) + w.depth * get(kDepthLoss) +
                   w.depth_aux * get(kDepthAuxLoss) + w.mask_vis * get(kMaskVisLoss) +
                   w.mask_occ * get(kMaskOccLoss);
    if (include_occupancy) total += w.occupancy * get(kOccupancyLoss);
    return total;
}

std::vector<Vec3> sample_query_points(std::size_t n, const Bounds& bounds, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("need at least one query point");
    if (!bounds.valid()) throw ArgumentError("query bounds need min < max");
    Rng rng(seed);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) {
        for (int a = 0; a < 3; ++a) p[a] = rng.uniform(bounds.min[a], bounds.max[a]);
    }
    return pts;
}

}  // namespace occlukit::loss
