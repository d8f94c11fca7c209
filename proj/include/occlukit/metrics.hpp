// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "occlukit/types.hpp"

/// Chamfer distance and F-Score@kτ between point sets.
///
/// Chamfer distance convention (default): half the sum of the two directed
/// mean nearest-neighbor distances, using plain (non-squared) Euclidean
/// distances. The squared variant is available through ChamferVariant.
namespace occlukit::metrics {

enum class NnBackend {
    kKdTree,      ///< exact kd-tree search, parallel over queries
    kBruteForce,  ///< O(n·m) scan, single-threaded
};

enum class ChamferVariant { kMeanDistance, kMeanSquaredDistance };

struct MetricConfig {
    double tau = 0.05;
    std::vector<int> multiples{1, 2, 3, 5};
    ChamferVariant chamfer = ChamferVariant::kMeanDistance;
    NnBackend backend = NnBackend::kKdTree;
    unsigned workers = 0;  ///< 0 = hardware concurrency

    void validate() const;
};

struct ThresholdScore {
    int multiple = 1;
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double fscore = 0.0;
};

struct FScoreReport {
    std::vector<ThresholdScore> scores;  ///< one per multiple, ascending
    double chamfer = 0.0;
};

/// For each query point, the exact Euclidean distance to its nearest target.
/// Throws ArgumentError when target is empty.
std::vector<double> nn_distances(const PointCloud& query, const PointCloud& target,
                                 NnBackend backend = NnBackend::kKdTree, unsigned workers = 0);

double chamfer_distance(const PointCloud& a, const PointCloud& b,
                        ChamferVariant variant = ChamferVariant::kMeanDistance,
                        NnBackend backend = NnBackend::kKdTree, unsigned workers = 0);

/// Harmonic mean, 0 when both inputs are 0.
double harmonic_fscore(double precision, double recall);

FScoreReport f_score(const PointCloud& pred, const PointCloud& gt, const MetricConfig& cfg = {});

}  // namespace occlukit::metrics
