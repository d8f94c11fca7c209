// SPDX-License-Identifier: Apache-2.0
// occlukit command-line entry point. Machine output is JSON on stdout (and in
// --report when given); --pretty swaps stdout for a key/value table.
//
// Exit codes: 0 ok, 1 usage, 2 data or validation error, 3 partial failure.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "occlukit/align.hpp"
#include "occlukit/augment.hpp"
#include "occlukit/camera.hpp"
#include "occlukit/evaluate.hpp"
#include "occlukit/geometry.hpp"
#include "occlukit/io.hpp"
#include "occlukit/losskit.hpp"
#include "occlukit/manifest.hpp"
#include "occlukit/maskops.hpp"
#include "occlukit/synthpipe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace occlukit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

struct Globals {
    std::string report;
    bool pretty = false;
    std::uint64_t seed = 0;
    unsigned workers = 0;
};

double r9(double v) { return io::round_sig9(v); }

json vec_json(const Vec3& v) { return json::array({r9(v.x()), r9(v.y()), r9(v.z())}); }

void print_table(const json& j, const std::string& prefix = "") {
    for (const auto& [key, value] : j.items()) {
        const std::string name = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            print_table(value, name);
        } else {
            std::cout << fmt::format("{:<32} {}\n", name, value.dump());
        }
    }
}

void emit(const json& report, const Globals& g) {
    const std::string text = io::canonical_dump(report);
    if (!g.report.empty()) io::write_file(g.report, text);
    if (g.pretty) {
        print_table(report);
    } else {
        std::cout << text;
    }
}

FloatRaster read_soft_mask(const fs::path& path) {
    const std::string bytes = io::read_file(path);
    if (bytes.rfind("Pf", 0) == 0) return io::decode_pfm(bytes, path.string());
    const Image gray = maskops::to_gray(io::read_image(path));
    FloatRaster soft(gray.width, gray.height);
    for (std::size_t k = 0; k < gray.data.size(); ++k) soft.data[k] = gray.data[k] / 255.0f;
    return soft;
}

camera::ScaleConvention parse_convention(const std::string& s) {
    if (s == "unit-ball") return camera::ScaleConvention::kUnitBall;
    if (s == "unit-rms") return camera::ScaleConvention::kUnitRms;
    return camera::ScaleConvention::kUnitBox;
}

io::PlyFormat parse_ply_format(bool ascii) {
    return ascii ? io::PlyFormat::kAscii : io::PlyFormat::kBinaryLittleEndian;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occlukit: occlusion-aware reconstruction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--report", g.report, "Also write the JSON report to this file");
    app.add_flag("--pretty", g.pretty, "Print a key/value table instead of JSON");
    auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every random choice");
    app.add_option("--workers", g.workers, "Worker threads (0 = all cores)");

    std::function<int()> run;

    // unproject
    auto* cmd_unproject = app.add_subcommand("unproject", "Depth + mask + intrinsics -> point cloud");
    std::string up_depth, up_mask, up_intr, up_out, up_conv = "unit-ball";
    double up_eta = 0.5;
    bool up_normalize = false, up_ascii = false;
    cmd_unproject->add_option("--depth", up_depth, "Depth map (PFM)")->required()->check(CLI::ExistingFile);
    cmd_unproject->add_option("--mask", up_mask, "Soft mask (PGM/PNG, or PFM in [0,1])")->required()->check(CLI::ExistingFile);
    cmd_unproject->add_option("--intrinsics", up_intr, "Intrinsics JSON")->required()->check(CLI::ExistingFile);
    cmd_unproject->add_option("--eta", up_eta, "Mask threshold");
    cmd_unproject->add_option("--out", up_out, "Output PLY")->required();
    cmd_unproject->add_flag("--normalize", up_normalize, "Center and rescale the cloud");
    cmd_unproject->add_option("--scale", up_conv, "Normalization scale convention")
            ->check(CLI::IsMember({"unit-ball", "unit-rms", "unit-box"}));
    cmd_unproject->add_flag("--ascii", up_ascii, "Write ASCII PLY");
    cmd_unproject->callback([&] {
        run = [&] {
            const auto depth = io::read_pfm(up_depth);
            const auto soft = read_soft_mask(up_mask);
            const auto K = io::read_intrinsics(up_intr);
            const auto pm = camera::unproject(depth, soft, K, camera::UnprojectConfig{up_eta});
            PointCloud cloud = pm.valid_points();
            json report{{"points", cloud.size()}};
            if (up_normalize) {
                auto [normed, t] = camera::normalize_points(cloud, parse_convention(up_conv));
                cloud = std::move(normed);
                report["normalization"] = json{{"centroid", vec_json(t.centroid)}, {"scale", r9(t.scale)}};
            }
            io::write_ply(cloud, up_out, parse_ply_format(up_ascii));
            emit(report, g);
            return kExitOk;
        };
    });

    // silhouette
    auto* cmd_sil = app.add_subcommand("silhouette", "Foreground mask of an image on a near-white background");
    std::string sil_img, sil_out;
    int sil_low = 250, sil_high = 255;
    cmd_sil->add_option("image", sil_img, "Input image (PNG/PPM/PGM)")->required()->check(CLI::ExistingFile);
    cmd_sil->add_option("--low", sil_low, "Lowest background luma")->check(CLI::Range(0, 255));
    cmd_sil->add_option("--high", sil_high, "Highest background luma")->check(CLI::Range(0, 255));
    cmd_sil->add_option("--out", sil_out, "Output mask PGM")->required();
    cmd_sil->callback([&] {
        run = [&] {
            const auto mask = maskops::extract_silhouette(io::read_image(sil_img),
                                                          static_cast<std::uint8_t>(sil_low),
                                                          static_cast<std::uint8_t>(sil_high));
            io::write_mask_pgm(mask, sil_out);
            emit(json{{"foreground_pixels", mask.count()},
                      {"width", mask.width},
                      {"height", mask.height}},
                 g);
            return kExitOk;
        };
    });

    // iou
    auto* cmd_iou = app.add_subcommand("iou", "Intersection over union of two masks");
    std::string iou_a, iou_b;
    cmd_iou->add_option("a", iou_a, "First mask PGM")->required()->check(CLI::ExistingFile);
    cmd_iou->add_option("b", iou_b, "Second mask PGM")->required()->check(CLI::ExistingFile);
    cmd_iou->callback([&] {
        run = [&] {
            emit(json{{"iou", r9(maskops::iou(io::read_mask_pgm(iou_a), io::read_mask_pgm(iou_b)))}}, g);
            return kExitOk;
        };
    });

    // augment
    auto* cmd_aug = app.add_subcommand("augment", "Paste seeded occluders onto a sample");
    std::string aug_sample, aug_lib, aug_out;
    double aug_tol = augment::kDefaultFocalTolMm;
    cmd_aug->add_option("--sample", aug_sample, "Sample JSON {image_path, mask_path, focal_mm}")->required()->check(CLI::ExistingFile);
    cmd_aug->add_option("--library", aug_lib, "Occluder library JSON")->required()->check(CLI::ExistingFile);
    cmd_aug->add_option("--out-dir", aug_out, "Output directory")->required();
    cmd_aug->add_option("--focal-tol", aug_tol, "Focal compatibility tolerance in mm");
    cmd_aug->callback([&] {
        run = [&] {
            json sj;
            try {
                sj = json::parse(io::read_file(aug_sample));
            } catch (const json::parse_error& e) {
                throw DataError(fmt::format("{}: {}", aug_sample, e.what()));
            }
            const auto base = fs::path(aug_sample).parent_path();
            auto resolve = [&](const char* key) {
                if (!sj.contains(key)) throw DataError(fmt::format("{}: missing '{}'", aug_sample, key));
                fs::path p = sj.at(key).get<std::string>();
                return p.is_relative() ? base / p : p;
            };
            augment::AugmentSample sample{io::read_image(resolve("image_path")),
                                          io::read_mask_pgm(resolve("mask_path"))};
            if (!sj.contains("focal_mm")) throw DataError(fmt::format("{}: missing 'focal_mm'", aug_sample));
            const double focal = sj.at("focal_mm").get<double>();
            const auto lib = augment::read_library(aug_lib);
            const auto plan = augment::sample_plan(g.seed, focal, lib,
                                                   {sample.image.width, sample.image.height}, aug_tol);
            const auto out = augment::apply_copy_paste(sample, plan, lib);
            const fs::path dir = aug_out;
            io::write_image(out.image, dir / "image.png");
            io::write_mask_pgm(out.visible_mask, dir / "visible_mask.pgm");
            io::write_mask_pgm(out.occluder_mask, dir / "occluder_mask.pgm");
            json picks = json::array();
            for (const auto& p : plan.picks) {
                picks.push_back(json{{"record_id", p.record_id},
                                     {"scale", r9(p.scale)},
                                     {"offset", json::array({p.offset.x, p.offset.y})}});
            }
            emit(json{{"seed", plan.seed},
                      {"requested", plan.requested},
                      {"no_candidates", plan.no_candidates},
                      {"picks", std::move(picks)},
                      {"visible_pixels", out.visible_mask.count()},
                      {"occluder_pixels", out.occluder_mask.count()}},
                 g);
            return kExitOk;
        };
    });

    // mesh
    auto* cmd_mesh = app.add_subcommand("mesh", "Marching cubes on an occupancy grid");
    std::string mesh_grid, mesh_out;
    double mesh_iso = 0.5;
    bool mesh_ascii = false;
    cmd_mesh->add_option("--grid", mesh_grid, "Occupancy grid (OCCGRID1)")->required()->check(CLI::ExistingFile);
    cmd_mesh->add_option("--iso", mesh_iso, "Isolevel");
    cmd_mesh->add_option("--out", mesh_out, "Output PLY")->required();
    cmd_mesh->add_flag("--ascii", mesh_ascii, "Write ASCII PLY");
    cmd_mesh->callback([&] {
        run = [&] {
            const auto grid = geometry::read_grid(mesh_grid);
            const auto mesh = geometry::marching_cubes(grid, mesh_iso, g.workers);
            io::write_ply(mesh, mesh_out, parse_ply_format(mesh_ascii));
            const auto topo = geometry::topology(mesh);
            emit(json{{"vertices", mesh.vertices.size()},
                      {"faces", mesh.triangles.size()},
                      {"watertight", topo.watertight()},
                      {"euler_characteristic", topo.euler_characteristic},
                      {"surface_area", r9(geometry::surface_area(mesh))},
                      {"signed_volume", r9(geometry::signed_volume(mesh))}},
                 g);
            return kExitOk;
        };
    });

    // align
    auto* cmd_align = app.add_subcommand("align", "Rigid ICP of src onto dst");
    std::string al_src, al_dst, al_out;
    align::IcpConfig al_cfg;
    cmd_align->add_option("--src", al_src, "Source PLY")->required()->check(CLI::ExistingFile);
    cmd_align->add_option("--dst", al_dst, "Target PLY")->required()->check(CLI::ExistingFile);
    cmd_align->add_option("--out", al_out, "Transform JSON")->required();
    cmd_align->add_option("--max-iterations", al_cfg.max_iterations, "Iteration cap");
    cmd_align->add_option("--tol", al_cfg.convergence_tol, "MSE improvement threshold");
    cmd_align->add_flag("--with-scale", al_cfg.with_scale, "Also estimate a uniform scale");
    cmd_align->callback([&] {
        run = [&] {
            al_cfg.workers = g.workers;
            const auto res = align::icp_align(io::read_ply_points(al_src), io::read_ply_points(al_dst), al_cfg);
            json R = json::array();
            const Mat3 sr = res.transform.scale * res.transform.rotation;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) R.push_back(r9(sr(i, j)));
            }
            json out{{"R", std::move(R)},
                     {"t", vec_json(res.transform.translation)},
                     {"rms", r9(res.final_rms)},
                     {"iterations", res.iterations}};
            io::write_file(al_out, io::canonical_dump(out));
            out["converged"] = res.converged;
            if (al_cfg.with_scale) out["scale"] = r9(res.transform.scale);
            emit(out, g);
            return kExitOk;
        };
    });

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "Chamfer distance and F-Score of a prediction");
    std::string ev_pred, ev_gt;
    eval::EvalConfig ev_cfg;
    bool ev_no_icp = false, ev_brute = false, ev_squared = false;
    cmd_eval->add_option("--pred", ev_pred, "Prediction (.occ grid or .ply)")->required()->check(CLI::ExistingFile);
    cmd_eval->add_option("--gt", ev_gt, "Ground truth (.occ grid or .ply)")->required()->check(CLI::ExistingFile);
    cmd_eval->add_option("--tau", ev_cfg.metrics.tau, "Base distance threshold");
    cmd_eval->add_option("--samples", ev_cfg.samples, "Surface samples per shape");
    cmd_eval->add_option("--iso", ev_cfg.isolevel, "Isolevel for grids");
    cmd_eval->add_flag("--no-icp", ev_no_icp, "Skip ICP alignment");
    cmd_eval->add_flag("--brute-force", ev_brute, "Use the O(n*m) nearest-neighbor scan");
    cmd_eval->add_flag("--squared-chamfer", ev_squared, "Chamfer over squared distances");
    cmd_eval->callback([&] {
        run = [&] {
            ev_cfg.icp = !ev_no_icp;
            ev_cfg.seed = g.seed;
            ev_cfg.metrics.workers = g.workers;
            if (ev_brute) ev_cfg.metrics.backend = metrics::NnBackend::kBruteForce;
            if (ev_squared) ev_cfg.metrics.chamfer = metrics::ChamferVariant::kMeanSquaredDistance;
            const auto res = eval::evaluate(eval::read_shape(ev_pred), eval::read_shape(ev_gt), ev_cfg);
            json report = eval::report_to_json(res.report);
            report["tau"] = r9(ev_cfg.metrics.tau);
            if (res.icp) {
                report["icp"] = json{{"iterations", res.icp->iterations},
                                     {"rms", r9(res.icp->final_rms)},
                                     {"converged", res.icp->converged}};
            }
            emit(report, g);
            return kExitOk;
        };
    });

    // losses
    auto* cmd_loss = app.add_subcommand("losses", "Reference values of the training losses");
    std::string ls_pred, ls_gt, ls_mask, ls_align = "lad", ls_aux_pred, ls_aux_target;
    std::string ls_vis_probs, ls_vis_mask, ls_occ_probs, ls_occ_mask, ls_pred_k, ls_gt_k;
    std::optional<double> ls_camera, ls_occupancy;
    loss::LossWeights ls_w;
    cmd_loss->add_option("--pred-depth", ls_pred, "Predicted depth (PFM)")->required()->check(CLI::ExistingFile);
    cmd_loss->add_option("--gt-depth", ls_gt, "Ground-truth depth (PFM)")->required()->check(CLI::ExistingFile);
    cmd_loss->add_option("--mask", ls_mask, "Visible region (PGM)")->required()->check(CLI::ExistingFile);
    cmd_loss->add_option("--alignment", ls_align, "SSI alignment")
            ->check(CLI::IsMember({"lad", "median-mad", "least-squares"}));
    cmd_loss->add_option("--aux-pred", ls_aux_pred, "Auxiliary predicted depth (PFM)")->check(CLI::ExistingFile);
    cmd_loss->add_option("--aux-target", ls_aux_target, "Pseudo-depth target (PFM)")->check(CLI::ExistingFile);
    cmd_loss->add_option("--vis-probs", ls_vis_probs, "Visible-mask probabilities (PFM)")->check(CLI::ExistingFile);
    cmd_loss->add_option("--vis-mask", ls_vis_mask, "Visible-mask labels (PGM)")->check(CLI::ExistingFile);
    cmd_loss->add_option("--occ-probs", ls_occ_probs, "Occluder-mask probabilities (PFM)")->check(CLI::ExistingFile);
    cmd_loss->add_option("--occ-mask", ls_occ_mask, "Occluder-mask labels (PGM)")->check(CLI::ExistingFile);
    cmd_loss->add_option("--pred-intrinsics", ls_pred_k, "Predicted intrinsics JSON (shape MSE)")->check(CLI::ExistingFile);
    cmd_loss->add_option("--gt-intrinsics", ls_gt_k, "Ground-truth intrinsics JSON (shape MSE)")->check(CLI::ExistingFile);
    cmd_loss->add_option("--camera-loss", ls_camera, "Precomputed camera loss value");
    cmd_loss->add_option("--occupancy-loss", ls_occupancy, "Precomputed occupancy loss value");
    cmd_loss->callback([&] {
        run = [&] {
            const auto alignment = ls_align == "lad"          ? loss::SsiAlignment::kLeastAbsolute
                                   : ls_align == "median-mad" ? loss::SsiAlignment::kMedianMad
                                                              : loss::SsiAlignment::kLeastSquares;
            const auto pred = io::read_pfm(ls_pred);
            const auto gt = io::read_pfm(ls_gt);
            const auto mask = io::read_mask_pgm(ls_mask);
            std::map<std::string, double> comp;
            const auto ssi = loss::ssi_mae(pred, gt, mask, alignment);
            comp[loss::kDepthLoss] = ssi.loss;
            if (ls_aux_pred.empty() != ls_aux_target.empty()) {
                throw ArgumentError("--aux-pred and --aux-target go together");
            }
            if (!ls_aux_pred.empty()) {
                const auto ap = io::read_pfm(ls_aux_pred);
                Mask full(ap.width, ap.height);
                std::fill(full.bits.begin(), full.bits.end(), std::uint8_t{1});
                comp[loss::kDepthAuxLoss] = loss::ssi_mae_loss(ap, io::read_pfm(ls_aux_target), full, alignment);
            }
            auto bce_pair = [&](const std::string& probs, const std::string& labels, const char* name) {
                if (probs.empty() != labels.empty()) {
                    throw ArgumentError(fmt::format("{}: probabilities and labels go together", name));
                }
                if (!probs.empty()) comp[name] = loss::bce_loss(io::read_pfm(probs), io::read_mask_pgm(labels));
            };
            bce_pair(ls_vis_probs, ls_vis_mask, loss::kMaskVisLoss);
            bce_pair(ls_occ_probs, ls_occ_mask, loss::kMaskOccLoss);
            if (ls_pred_k.empty() != ls_gt_k.empty()) {
                throw ArgumentError("--pred-intrinsics and --gt-intrinsics go together");
            }
            if (!ls_pred_k.empty()) {
                if (ls_camera) throw ArgumentError("give --camera-loss or intrinsics, not both");
                comp[loss::kCameraLoss] = loss::shape_mse_loss(
                        camera::unproject(pred, mask, io::read_intrinsics(ls_pred_k)),
                        camera::unproject(gt, mask, io::read_intrinsics(ls_gt_k)));
            }
            if (ls_camera) comp[loss::kCameraLoss] = *ls_camera;
            if (ls_occupancy) comp[loss::kOccupancyLoss] = *ls_occupancy;

            json report;
            for (const auto& [k, v] : comp) report[k] = r9(v);
            report["ssi_scale"] = r9(ssi.scale);
            report["ssi_shift"] = r9(ssi.shift);
            bool pixel_complete = true;
            for (const char* k : {loss::kCameraLoss, loss::kDepthLoss, loss::kDepthAuxLoss,
                                  loss::kMaskVisLoss, loss::kMaskOccLoss}) {
                pixel_complete = pixel_complete && comp.count(k);
            }
            if (pixel_complete) {
                report["total"] = r9(loss::total_loss(comp, ls_w, comp.count(loss::kOccupancyLoss) > 0));
            }
            emit(report, g);
            return kExitOk;
        };
    });

    // synth
    auto* cmd_synth = app.add_subcommand("synth", "Synthesize training records from render stubs");
    std::string sy_renders, sy_config, sy_out, sy_distort = "none";
    double sy_timeout = 120.0;
    cmd_synth->add_option("--renders", sy_renders, "Render stubs JSON")->required()->check(CLI::ExistingFile);
    cmd_synth->add_option("--config", sy_config, "Pipeline config JSON")->check(CLI::ExistingFile);
    cmd_synth->add_option("--out-dir", sy_out, "Output directory")->required();
    cmd_synth->add_option("--timeout", sy_timeout, "HTTP generator timeout in seconds");
    cmd_synth->add_option("--mock-distort", sy_distort,
                          "Rig the mock object generator: distort no, first-attempt or all outputs")
            ->check(CLI::IsMember({"none", "first", "all"}));
    cmd_synth->callback([&] {
        run = [&] {
            synth::SynthConfig cfg = sy_config.empty() ? synth::SynthConfig{} : synth::read_config(sy_config);
            if (seed_opt->count() > 0) cfg.seed = g.seed;
            if (g.workers > 0) cfg.workers = g.workers;
            const auto renders = synth::read_renders(sy_renders);
            synth::GeneratorPort port = synth::generators_from_env(sy_timeout);
            if (sy_distort != "none") {
                std::set<std::uint64_t> first_seeds;
                for (const auto& r : renders) first_seeds.insert(synth::attempt_seed(cfg.seed, r.record_id, 1));
                const bool all = sy_distort == "all";
                port = synth::distorting_generators(std::move(port), [all, first_seeds](std::uint64_t s) {
                    return all || first_seeds.count(s) > 0;
                });
            }
            const auto res = synth::run_pipeline(renders, cfg, port, sy_out);
            json dropped = json::array();
            for (const auto& o : res.outcomes) {
                if (!o.accepted) dropped.push_back(json{{"record_id", o.record_id}, {"reason", o.drop_reason}});
            }
            emit(json{{"renders", renders.size()},
                      {"accepted", res.manifest.records.size()},
                      {"dropped", std::move(dropped)},
                      {"manifest", (fs::path(sy_out) / "manifest.json").string()},
                      {"pipeline_config_hash", res.manifest.pipeline_config_hash}},
                 g);
            if (res.partial_failure()) {
                std::cerr << fmt::format("occlukit synth: {} of {} records dropped (see synth_log.json)\n",
                                         res.dropped, renders.size());
                return kExitPartial;
            }
            return kExitOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        return run();
    } catch (const ArgumentError& e) {
        std::cerr << "occlukit: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "occlukit: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "occlukit: " << e.what() << "\n";
        return kExitData;
    }
}
