// SPDX-License-Identifier: Apache-2.0
#include "occlukit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "occlukit/kdtree.hpp"
#include "occlukit/parallel.hpp"

namespace occlukit::metrics {

void MetricConfig::validate() const {
    if (!(tau > 0.0)) throw ArgumentError(fmt::format("tau must be positive, got {}", tau));
    if (multiples.empty()) throw ArgumentError("at least one threshold multiple is required");
    for (std::size_t k = 0; k < multiples.size(); ++k) {
        if (multiples[k] <= 0) throw ArgumentError("threshold multiples must be positive");
        if (k > 0 && multiples[k] <= multiples[k - 1]) {
            throw ArgumentError("threshold multiples must be strictly ascending");
        }
    }
}

std::vector<double> nn_distances(const PointCloud& query, const PointCloud& target,
                                 NnBackend backend, unsigned workers) {
    if (target.empty()) throw ArgumentError("nearest-neighbor target cloud is empty");
    std::vector<double> out(query.size());
    if (backend == NnBackend::kBruteForce) {
        for (std::size_t i = 0; i < query.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& t : target.points) best = std::min(best, squared_distance(query[i], t));
            out[i] = std::sqrt(best);
        }
        return out;
    }
    const KdTree tree(target.points);
    parallel_for(query.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            out[i] = std::sqrt(tree.nearest(query[i]).squared_distance);
        }
    });
    return out;
}

namespace {

double directed_mean(const std::vector<double>& d, ChamferVariant variant) {
    double acc = 0.0;
    if (variant == ChamferVariant::kMeanDistance) {
        for (double v : d) acc += v;
    } else {
        for (double v : d) acc += v * v;
    }
    return acc / static_cast<double>(d.size());
}

void require_nonempty(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw ArgumentError("metric inputs must be nonempty point clouds");
}

double chamfer_from(const std::vector<double>& ab, const std::vector<double>& ba,
                    ChamferVariant variant) {
    // Sum in a fixed order so CD(a, b) == CD(b, a) bit for bit.
    const double x = directed_mean(ab, variant);
    const double y = directed_mean(ba, variant);
    return 0.5 * (std::min(x, y) + std::max(x, y));
}

double fraction_within(const std::vector<double>& d, double threshold) {
    std::size_t hits = 0;
    for (double v : d) hits += v <= threshold ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(d.size());
}

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b, ChamferVariant variant,
                        NnBackend backend, unsigned workers) {
    require_nonempty(a, b);
    return chamfer_from(nn_distances(a, b, backend, workers), nn_distances(b, a, backend, workers),
                        variant);
}

double harmonic_fscore(double precision, double recall) {
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

FScoreReport f_score(const PointCloud& pred, const PointCloud& gt, const MetricConfig& cfg) {
    cfg.validate();
    require_nonempty(pred, gt);
    const auto pred_to_gt = nn_distances(pred, gt, cfg.backend, cfg.workers);
    const auto gt_to_pred = nn_distances(gt, pred, cfg.backend, cfg.workers);

    FScoreReport report;
    report.chamfer = chamfer_from(pred_to_gt, gt_to_pred, cfg.chamfer);
    for (int k : cfg.multiples) {
        ThresholdScore s;
        s.multiple = k;
        s.threshold = k * cfg.tau;
        s.precision = fraction_within(pred_to_gt, s.threshold);
        s.recall = fraction_within(gt_to_pred, s.threshold);
        s.fscore = harmonic_fscore(s.precision, s.recall);
        report.scores.push_back(s);
    }
    return report;
}

}  // namespace occlukit::metrics
