// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/core.h>

#include "common/render_stubs.hpp"
#include "occlukit/align.hpp"
#include "occlukit/augment.hpp"
#include "occlukit/camera.hpp"
#include "occlukit/evaluate.hpp"
#include "occlukit/geometry.hpp"
#include "occlukit/losskit.hpp"
#include "occlukit/maskops.hpp"
#include "occlukit/metrics.hpp"
#include "occlukit/synthpipe.hpp"

using namespace occlukit;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

PointCloud random_cloud(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    PointCloud c;
    for (std::size_t k = 0; k < n; ++k) c.points.emplace_back(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
    return c;
}

// Independent O(n*m) nearest-neighbor scan.
std::vector<double> brute_nn(const PointCloud& q, const PointCloud& t) {
    std::vector<double> d(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        double best = INFINITY;
        for (const Vec3& p : t.points) best = std::min(best, (q[i] - p).squaredNorm());
        d[i] = std::sqrt(best);
    }
    return d;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double within(const std::vector<double>& v, double thr) {
    std::size_t n = 0;
    for (double x : v) n += x <= thr;
    return static_cast<double>(n) / static_cast<double>(v.size());
}

Outcome metric_oracle() {
    Rng rng(101);
    double max_cd = 0.0, max_fs = 0.0, slowest = 0.0;
    for (int pair = 0; pair < 100; ++pair) {
        const auto a = random_cloud(rng, 20 + rng.below(481));
        const auto b = random_cloud(rng, 20 + rng.below(481), -0.9, 1.1);
        const auto t0 = Clock::now();
        const auto rep = metrics::f_score(a, b);
        const double cd = metrics::chamfer_distance(a, b);
        const auto ab = brute_nn(a, b), ba = brute_nn(b, a);
        slowest = std::max(slowest, ms_since(t0));
        max_cd = std::max({max_cd, std::abs(cd - 0.5 * (mean(ab) + mean(ba))), std::abs(rep.chamfer - cd)});
        for (const auto& s : rep.scores) {
            const double p = within(ab, s.threshold), r = within(ba, s.threshold);
            const double fs = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
            max_fs = std::max({max_fs, std::abs(fs - s.fscore), std::abs(p - s.precision), std::abs(r - s.recall)});
        }
    }
    return {max_cd <= 1e-12 && max_fs <= 1e-12 && slowest < 1000.0,
            fmt::format("100 pairs, max |dCD| {:.1e}, max |dFS| {:.1e}, slowest pair {:.1f} ms", max_cd, max_fs, slowest)};
}

Outcome fs_monotonicity() {
    Rng rng(202);
    int violations = 0;
    for (int pair = 0; pair < 1000; ++pair) {
        const double spread = rng.uniform(0.0, 0.3);
        const auto a = random_cloud(rng, 200);
        auto b = random_cloud(rng, 150 + rng.below(100));
        for (auto& p : b.points) p += Vec3(rng.normal(), rng.normal(), rng.normal()) * spread;
        const auto rep = metrics::f_score(a, b);
        for (std::size_t k = 1; k < rep.scores.size(); ++k) violations += rep.scores[k - 1].fscore > rep.scores[k].fscore;
    }
    return {violations == 0, fmt::format("1000 pairs, multiples 1/2/3/5, {} violations", violations)};
}

Outcome unprojection() {
    Rng rng(303);
    double max_err = 0.0;
    std::size_t oracle_mismatch = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const int w = 100, h = 100;
        camera::CameraIntrinsics K{rng.uniform(50, 500), rng.uniform(50, 500), rng.uniform(20, 80), rng.uniform(20, 80), w, h};
        FloatRaster depth(w, h);
        for (auto& d : depth.data) d = static_cast<float>(rng.uniform(0.3, 8.0));
        const auto pm = camera::unproject(depth, Mask(w, h, true), K);
        const auto uv = camera::project(pm, K);
        for (int j = 0; j < h; ++j) {
            for (int i = 0; i < w; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * w + i;
                max_err = std::max(max_err, (uv[k] - Eigen::Vector2d(i, j)).norm());
                const double d = depth.at(i, j);
                const Vec3 expect((i - K.cx) * d / K.fx, (j - K.cy) * d / K.fy, d);
                oracle_mismatch += pm.at(i, j) != expect;
            }
        }
    }
    return {max_err < 1e-5 && oracle_mismatch == 0,
            fmt::format("10 cameras x 10^4 pixels, max reprojection error {:.1e} px, {} scalar-oracle mismatches",
                        max_err, oracle_mismatch)};
}

double mae(const std::vector<double>& p, const std::vector<double>& y, double s, double t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) acc += std::abs(s * p[k] + t - y[k]);
    return acc / static_cast<double>(p.size());
}

// 200x200 grid over (scale, shift) around the least-squares fit, then three
// more 200x200 grids zoomed 20x around the best cell.
double grid_search(const std::vector<double>& p, const std::vector<double>& y) {
    double mp = mean(p), my = mean(y), cov = 0.0, var = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        cov += (p[k] - mp) * (y[k] - my);
        var += (p[k] - mp) * (p[k] - mp);
    }
    double s0 = cov / var, t0 = my - s0 * mp, span_s = 4.0 * (std::abs(s0) + 1.0), span_t = 4.0 * (std::abs(t0) + 1.0);
    double best = INFINITY;
    for (int round = 0; round < 4; ++round) {
        double bs = s0, bt = t0;
        for (int i = 0; i < 200; ++i) {
            for (int j = 0; j < 200; ++j) {
                const double s = s0 - span_s / 2 + span_s * i / 199.0, t = t0 - span_t / 2 + span_t * j / 199.0;
                const double v = mae(p, y, s, t);
                if (v < best) best = v, bs = s, bt = t;
            }
        }
        s0 = bs, t0 = bt, span_s /= 20.0, span_t /= 20.0;
    }
    return best;
}

Outcome ssi_invariance() {
    Rng rng(404);
    double worst_inv = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        FloatRaster d(8, 8);
        for (auto& v : d.data) v = static_cast<float>(rng.uniform(0.5, 5.0));
        const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-5.0, 5.0);
        FloatRaster p(8, 8);
        for (std::size_t k = 0; k < d.size(); ++k) p.data[k] = static_cast<float>(a * d.data[k] + b);
        worst_inv = std::max(worst_inv, loss::ssi_mae_loss(p, d, Mask(8, 8, true)));
    }
    double worst_grid = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p(16), y(16);
        for (int k = 0; k < 16; ++k) {
            p[k] = rng.uniform(0.5, 4.0);
            y[k] = rng.uniform(0.5, 4.0) + 0.8 * p[k];
        }
        worst_grid = std::max(worst_grid, std::abs(loss::ssi_mae(p, y).loss - grid_search(p, y)));
    }
    return {worst_inv < 1e-6 && worst_grid <= 1e-4,
            fmt::format("100 affine copies, max loss {:.1e}; 20 4x4 cases, max |loss - grid minimum| {:.1e}", worst_inv,
                        worst_grid)};
}

Outcome icp_recovery() {
    Rng rng(505);
    double worst_rot = 0.0, worst_t = 0.0;
    int worst_it = 0;
    const auto t0 = Clock::now();
    for (int trial = 0; trial < 50; ++trial) {
        PointCloud src;
        for (int k = 0; k < 1000; ++k) src.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-0.6, 0.6), rng.uniform(-0.3, 0.3));
        Vec3 axis(rng.normal(), rng.normal(), rng.normal());
        align::RigidTransform truth;
        truth.rotation = Eigen::AngleAxisd(rng.uniform(0.0, std::numbers::pi / 6), axis.normalized()).toRotationMatrix();
        truth.translation = Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
        const auto res = align::icp_align(src, align::apply_transform(truth, src));
        worst_rot = std::max(worst_rot, align::rotation_angle_between(res.transform.rotation, truth.rotation));
        worst_t = std::max(worst_t, (res.transform.translation - truth.translation).norm());
        worst_it = std::max(worst_it, res.iterations);
    }
    const double total = ms_since(t0);
    return {worst_rot < 1e-3 && worst_t < 1e-4 && worst_it <= 100 && total < 2000.0,
            fmt::format("50 transforms <= 30 deg, max rotation error {:.1e} rad, max translation error {:.1e}, "
                        "max {} iterations, {:.0f} ms total",
                        worst_rot, worst_t, worst_it, total)};
}

Outcome marching_cubes_sphere() {
    const auto sphere = geometry::AnalyticField::sphere(Vec3::Zero(), 0.35);
    const auto grid = geometry::eval_grid(sphere, 64, Bounds{});
    const auto mesh = geometry::marching_cubes(grid);
    double err = 0.0;
    for (const auto& v : mesh.vertices) err += std::abs(v.norm() - 0.35);
    const double voxel = grid.spacing(0);
    const double mean_err = err / static_cast<double>(mesh.vertices.size()) / voxel;
    const auto topo = geometry::topology(mesh);

    const double exact = 4.0 * std::numbers::pi * 0.35 * 0.35;
    const geometry::FieldProfile smooth{geometry::FieldProfile::Kind::kLogistic, 0.01};
    const double area = geometry::surface_area(geometry::marching_cubes(geometry::eval_grid(sphere, 128, Bounds{}, smooth)));
    const double hard = geometry::surface_area(geometry::marching_cubes(geometry::eval_grid(sphere, 128, Bounds{})));
    const double area_err = area / exact - 1.0;
    return {mean_err < 1.5 && topo.watertight() && topo.euler_characteristic == 2 && std::abs(area_err) < 0.05,
            fmt::format("64^3: mean radius error {:.3f} voxels, watertight {}, V-E+F = {}; 128^3 area error {:+.2f}% "
                        "(logistic occupancy, width 0.01; binary 0/1 samples give {:+.2f}%)",
                        mean_err, topo.watertight(), topo.euler_characteristic, 100 * area_err, 100 * (hard / exact - 1.0))};
}

double chi_square_p(const std::vector<std::size_t>& hits, const std::vector<double>& expected) {
    double chi2 = 0.0;
    for (std::size_t k = 0; k < hits.size(); ++k) {
        const double d = static_cast<double>(hits[k]) - expected[k];
        chi2 += d * d / expected[k];
    }
    return boost::math::gamma_q(0.5 * static_cast<double>(hits.size() - 1), 0.5 * chi2);
}

Outcome surface_sampling() {
    Rng rng(707);
    TriangleMesh mesh;
    for (int k = 0; k < 40; ++k) {
        const double s = rng.uniform(0.2, 2.0), z = k;
        const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.insert(mesh.vertices.end(), {Vec3(0, 0, z), Vec3(s, 0, z), Vec3(0, 1, z)});
        mesh.triangles.push_back({base, base + 1, base + 2});
    }
    const std::size_t n = 100000;
    auto p_value = [&](const TriangleMesh& m, std::uint64_t seed) {
        const auto s = geometry::sample_surface_with_faces(m, n, seed);
        std::vector<std::size_t> hits(m.triangles.size());
        for (auto t : s.triangle) ++hits[t];
        const double total = geometry::surface_area(m);
        std::vector<double> expected;
        for (std::size_t t = 0; t < m.triangles.size(); ++t) expected.push_back(n * geometry::triangle_area(m, t) / total);
        return chi_square_p(hits, expected);
    };
    const double p_varied = p_value(mesh, 1);
    const auto sphere = geometry::marching_cubes(
            geometry::eval_grid(geometry::AnalyticField::sphere(Vec3::Zero(), 0.5), 20, Bounds{}));
    const double p_sphere = p_value(sphere, 2);
    const std::size_t default_n = geometry::sample_surface(mesh).size();
    return {p_varied > 0.01 && p_sphere > 0.01 && default_n == 10000,
            fmt::format("n = 10^5: chi-square p = {:.3f} (40 triangles of varied area), p = {:.3f} ({}-triangle sphere); "
                        "default sample count {}",
                        p_varied, p_sphere, sphere.triangles.size(), default_n)};
}

Outcome degradation() {
    const auto field = geometry::AnalyticField::make_union(
            {geometry::AnalyticField::sphere(Vec3(-0.2, 0, 0), 0.4), geometry::AnalyticField::box(Vec3(0.3, 0, 0), Vec3(0.3, 0.5, 0.2))});
    const auto gt = geometry::eval_grid(field, 32, Bounds{});
    const std::vector<double> levels{0.01, 0.05, 0.10, 0.20};
    std::vector<double> cds, fss;
    for (double level : levels) {
        double cd = 0.0, fs = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto pred = gt;
            Rng rng(seed * 31 + 7);
            std::vector<std::size_t> idx(pred.values.size());
            for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
            const auto flips = static_cast<std::size_t>(std::round(level * static_cast<double>(idx.size())));
            for (std::size_t k = 0; k < flips; ++k) {
                std::swap(idx[k], idx[k + rng.below(idx.size() - k)]);
                pred.values[idx[k]] = 1.0f - pred.values[idx[k]];
            }
            eval::EvalConfig cfg;
            cfg.seed = seed;
            const auto res = eval::evaluate(pred, gt, cfg);
            cd += res.report.chamfer / 5.0;
            fs += res.report.scores[0].fscore / 5.0;
        }
        cds.push_back(cd);
        fss.push_back(fs);
    }
    bool ok = true;
    for (std::size_t k = 1; k < levels.size(); ++k) ok = ok && cds[k] >= cds[k - 1] && fss[k] <= fss[k - 1];
    return {ok, fmt::format("flip 1/5/10/20%: CD {:.4f} {:.4f} {:.4f} {:.4f}, FS@tau {:.3f} {:.3f} {:.3f} {:.3f}", cds[0],
                            cds[1], cds[2], cds[3], fss[0], fss[1], fss[2], fss[3])};
}

std::map<std::string, std::string> tree(const std::filesystem::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[std::filesystem::relative(e.path(), root).string()] = io::read_file(e.path());
    }
    return files;
}

Outcome synthesis(const std::filesystem::path& work) {
    const auto renders = test::write_render_stubs(work / "renders", 20, 9);
    synth::SynthConfig cfg;
    cfg.seed = 2024;
    cfg.backoff_ms = 0;
    const auto port = synth::mock_generators();
    synth::run_pipeline(renders, cfg, port, work / "w1");
    cfg.workers = 8;
    synth::run_pipeline(renders, cfg, port, work / "w8");
    const auto a = tree(work / "w1"), b = tree(work / "w8");
    std::size_t images = 0;
    for (const auto& [name, bytes] : a) images += name.rfind("images/", 0) == 0;
    const bool identical = a == b && images == 20;

    // Every attempt whose seed is divisible by 3 loses 10% of its silhouette.
    auto distort = [](std::uint64_t s) { return s % 3 == 0; };
    cfg.workers = 1;
    const auto rigged = synth::run_pipeline(renders, cfg, synth::distorting_generators(port, distort, 0.1), work / "rigged");
    std::size_t distorted = 0, leaked = 0, clean_rejected = 0;
    for (const auto& o : rigged.outcomes) {
        for (const auto& at : o.attempts) {
            if (distort(at.seed)) {
                ++distorted;
                leaked += at.accepted;
            } else {
                clean_rejected += !at.accepted;
            }
        }
    }
    return {identical && distorted > 0 && leaked == 0 && clean_rejected == 0,
            fmt::format("20 renders, 1 vs 8 workers: {} files {}; rigged run: {} distorted attempts, {} accepted, "
                        "{} clean attempts rejected",
                        a.size(), identical ? "byte-identical" : "DIFFER", distorted, leaked, clean_rejected)};
}

Outcome copy_paste() {
    augment::OccluderLibrary lib;
    Rng rng(1010);
    for (int k = 0; k < 6; ++k) {
        augment::OccluderEntry e;
        e.record_id = fmt::format("occ{}", k);
        e.focal_mm = 40.0 + k;
        const int w = 20 + 10 * k, h = 30 + 5 * k;
        e.image = Image(w, h, 3, static_cast<std::uint8_t>(30 * k));
        e.mask = Mask(w, h);
        for (auto& bit : e.mask.bits) bit = rng.below(4) != 0;
        lib.entries.push_back(std::move(e));
    }
    augment::AugmentSample sample{Image(64, 64, 3, 255), Mask(64, 64)};
    for (int y = 10; y < 54; ++y) {
        for (int x = 14; x < 50; ++x) sample.mask.set(x, y, (x * 7 + y * 3) % 11 != 0);
    }
    std::array<int, 3> counts{};
    double min_scale = INFINITY, max_scale = -INFINITY;
    std::size_t broken = 0;
    const int n = 10000;
    for (int s = 0; s < n; ++s) {
        const auto plan = augment::sample_plan(static_cast<std::uint64_t>(s), 42.0, lib, {64, 64});
        if (plan.picks.size() > 2) return {false, "plan with more than 2 occluders"};
        ++counts[plan.picks.size()];
        for (const auto& p : plan.picks) min_scale = std::min(min_scale, p.scale), max_scale = std::max(max_scale, p.scale);
        const auto out = augment::apply_copy_paste(sample, plan, lib);
        const bool disjoint = maskops::mask_and(out.visible_mask, out.occluder_mask).count() == 0;
        const bool restores =
                maskops::mask_or(out.visible_mask, maskops::mask_and(out.occluder_mask, sample.mask)) == sample.mask;
        broken += !(disjoint && restores);
    }
    const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
    bool uniform = true;
    for (int c : counts) uniform = uniform && std::abs(c - n / 3.0) <= 3 * sigma;
    return {uniform && min_scale >= 0.4 && max_scale <= 0.6 && broken == 0,
            fmt::format("10^4 plans: counts {}/{}/{} (3 sigma = {:.0f}), scales in [{:.4f}, {:.4f}], {} partition failures",
                        counts[0], counts[1], counts[2], 3 * sigma, min_scale, max_scale, broken)};
}

Outcome loss_aggregation() {
    std::map<std::string, double> ones;
    for (const char* k : {loss::kCameraLoss, loss::kDepthLoss, loss::kDepthAuxLoss, loss::kMaskVisLoss, loss::kMaskOccLoss,
                          loss::kOccupancyLoss}) {
        ones[k] = 1.0;
    }
    const double full = loss::total_loss(ones), pixel = loss::total_loss(ones, {}, false);
    bool bce_exact = true;
    for (int side : {1, 4, 7, 64}) {
        FloatRaster half(side, side, 0.5f);
        Mask labels(side, side);
        for (std::size_t k = 0; k < labels.bits.size(); ++k) labels.bits[k] = k % 3 == 0;
        bce_exact = bce_exact && loss::bce_loss(half, labels) == std::numbers::ln2;
    }
    return {std::abs(full - 14.1) < 1e-12 && std::abs(pixel - 13.1) < 1e-12 && bce_exact,
            fmt::format("total {:.15g} with occupancy, {:.15g} without; BCE(p = 0.5) == ln 2: {}", full, pixel, bce_exact)};
}

Outcome performance() {
    Rng rng(1212);
    const auto a = random_cloud(rng, 10000), b = random_cloud(rng, 10000);
    std::vector<double> kd_times;
    double kd = 0.0;
    for (int rep = 0; rep < 7; ++rep) {
        const auto t0 = Clock::now();
        kd = metrics::chamfer_distance(a, b);
        kd_times.push_back(ms_since(t0));
    }
    std::sort(kd_times.begin(), kd_times.end());
    const double kd_ms = kd_times[kd_times.size() / 2];
    const auto t0 = Clock::now();
    const double brute = metrics::chamfer_distance(a, b, metrics::ChamferVariant::kMeanDistance, metrics::NnBackend::kBruteForce);
    const double brute_ms = ms_since(t0);
    return {kd_ms < 50.0 && brute_ms >= 10.0 * kd_ms && kd == brute,
            fmt::format("10K vs 10K points: kd-tree {:.1f} ms (median of 7), brute force {:.0f} ms, speedup {:.1f}x, "
                        "values equal: {}",
                        kd_ms, brute_ms, brute_ms / kd_ms, kd == brute)};
}

}  // namespace

int main() {
    const auto work = std::filesystem::temp_directory_path() / fmt::format("occlukit_acceptance_{}", ::getpid());
    std::filesystem::remove_all(work);
    std::filesystem::create_directories(work);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
            {"metric oracle equivalence", metric_oracle},
            {"F-Score monotonicity", fs_monotonicity},
            {"unprojection round trip", unprojection},
            {"SSI-MAE invariance", ssi_invariance},
            {"ICP recovery", icp_recovery},
            {"marching cubes sphere", marching_cubes_sphere},
            {"surface sampling", surface_sampling},
            {"degradation monotonicity", degradation},
            {"synthesis determinism and filtering", [&] { return synthesis(work); }},
            {"copy-paste bounds", copy_paste},
            {"loss aggregation", loss_aggregation},
            {"performance", performance},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        failed += !o.pass;
        fmt::print("{} {:2d} {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail,
                   ms_since(t0) / 1000.0);
        std::fflush(stdout);
    }
    std::filesystem::remove_all(work);
    fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
