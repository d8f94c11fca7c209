// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "occlukit/rng.hpp"
#include "occlukit/types.hpp"

namespace occlukit::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("occlukit_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline PointCloud random_cloud(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    PointCloud c;
    c.points.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        c.points.emplace_back(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
    }
    return c;
}

inline Mat3 random_rotation(Rng& rng, double max_angle) {
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    return Eigen::AngleAxisd(rng.uniform(0.0, max_angle), axis).toRotationMatrix();
}

}  // namespace occlukit::test
