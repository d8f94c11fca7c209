// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "common/render_stubs.hpp"
#include "occlukit/maskops.hpp"
#include "occlukit/synthpipe.hpp"
#include "support.hpp"

using namespace occlukit;
using namespace occlukit::synth;

namespace {

SynthConfig fast_config(std::uint64_t seed = 7) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.backoff_ms = 0;
    return cfg;
}

std::string tree_bytes(const std::filesystem::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[std::filesystem::relative(e.path(), root).string()] = io::read_file(e.path());
    }
    std::string all;
    for (const auto& [name, bytes] : files) all += name + '\0' + bytes + '\0';
    return all;
}

}  // namespace

TEST(Prompts, Templates) {
    EXPECT_EQ(build_object_prompt("red", "wooden", "chair"), "a red wooden chair");
    EXPECT_EQ(build_object_prompt("", "", "chair"), "a chair");
    EXPECT_EQ(build_object_prompt("blue", "", "table"), "a blue table");
    EXPECT_EQ(build_scene_prompt("chair", "kitchen"), "a chair in the kitchen");
    EXPECT_EQ(build_scene_prompt("sofa", "living room"), "a sofa in the living room");
}

TEST(Guidance, NoiseStatistics) {
    const Image flat(200, 200, 3, 128);
    EXPECT_EQ(perturb_guidance(flat, 0.0, 1), flat);
    const Image noisy = perturb_guidance(flat, 0.2, 1);
    double sum = 0.0, sq = 0.0;
    for (auto v : noisy.data) {
        const double d = v - 128.0;
        sum += d;
        sq += d * d;
    }
    const double n = static_cast<double>(noisy.data.size());
    const double sigma = std::sqrt(sq / n - (sum / n) * (sum / n));
    EXPECT_NEAR(sigma / (0.2 * 127.5), 1.0, 0.05);
    EXPECT_NEAR(sum / n, 0.0, 0.5);
    EXPECT_EQ(noisy, perturb_guidance(flat, 0.2, 1));
    EXPECT_NE(noisy, perturb_guidance(flat, 0.2, 2));
    EXPECT_DOUBLE_EQ(kDefaultGuidanceNoise, 1.0 - 8.0 / 20.0);
}

TEST(Filtering, KappaBoundaryIsInclusive) {
    // 100-pixel render mask; a foreground covering 95 of them has IoU exactly 0.95.
    Mask render(20, 5, true);
    Image fg(20, 5, 3, 100);
    for (int x = 15; x < 20; ++x) std::fill_n(fg.pixel(x, 4), 3, std::uint8_t{255});
    EXPECT_DOUBLE_EQ(silhouette_iou(fg, render), 0.95);
    EXPECT_FALSE(is_filtered(fg, render));
    std::fill_n(fg.pixel(14, 4), 3, std::uint8_t{255});
    EXPECT_TRUE(is_filtered(fg, render));
}

TEST(Seeds, StableAndIndependent) {
    EXPECT_EQ(derive_seed(1, "a", "attempt", 1), derive_seed(1, "a", "attempt", 1));
    std::set<std::uint64_t> seen;
    for (std::uint64_t base : {0ull, 1ull}) {
        for (const char* id : {"a", "b", "ab"}) {
            for (const char* stream : {"attempt", "scene"}) {
                for (std::uint32_t k = 0; k < 3; ++k) seen.insert(derive_seed(base, id, stream, k));
            }
        }
    }
    EXPECT_EQ(seen.size(), 36u);
    // Length prefixes keep ("a", "bc") and ("ab", "c") apart.
    EXPECT_NE(derive_seed(0, "a", "bc", 0), derive_seed(0, "ab", "c", 0));
}

TEST(MockGenerators, SilhouetteAndOutpaintContracts) {
    test::TempDir dir;
    const auto port = mock_generators();
    for (int k = 0; k < 10; ++k) {
        const auto r = test::write_render_stub(dir.path(), "m" + std::to_string(k), static_cast<std::uint64_t>(k));
        const auto depth = io::read_pfm(r.depth_path);
        const auto mask = io::read_mask_pgm(r.mask_path);
        const auto guide = io::read_image(r.image_path);
        const Image fg = port.object_appearance({depth, guide, "a red chair", 11});
        EXPECT_GE(silhouette_iou(fg, mask), 0.99);
        const Image out = port.background_outpaint({fg, mask, "a chair in the kitchen", 3});
        for (int y = 0; y < mask.height; ++y) {
            for (int x = 0; x < mask.width; ++x) {
                if (!mask.at(x, y)) continue;
                for (int c = 0; c < 3; ++c) ASSERT_EQ(out.pixel(x, y)[c], fg.pixel(x, y)[c]);
            }
        }
    }
}

TEST(Pipeline, AcceptsMockOutputsAndWritesDataset) {
    test::TempDir dir;
    const auto renders = test::write_render_stubs(dir / "in", 6);
    const auto res = run_pipeline(renders, fast_config(), mock_generators(), dir / "out");
    EXPECT_EQ(res.dropped, 0u);
    ASSERT_EQ(res.manifest.records.size(), 6u);
    const auto on_disk = io::read_manifest(dir / "out/manifest.json");
    EXPECT_EQ(on_disk.pipeline_config_hash, fast_config().hash());
    for (std::size_t k = 0; k < on_disk.records.size(); ++k) {
        const auto& rec = on_disk.records[k];
        if (k > 0) EXPECT_LT(on_disk.records[k - 1].record_id, rec.record_id);
        EXPECT_GE(rec.attempts, 1u);
        EXPECT_FALSE(rec.prompts.object.empty());
        EXPECT_NE(rec.prompts.scene.find(" in the "), std::string::npos);
        // Re-check the stored foreground against the stored mask.
        const auto fg = io::read_image(dir / "out" / ("fg/" + rec.record_id + ".png"));
        const auto mask = io::read_mask_pgm(dir / "out" / rec.mask_path);
        EXPECT_GE(silhouette_iou(fg, mask), 0.95);
        EXPECT_EQ(io::read_file(dir / "out" / rec.depth_path), io::read_file(renders[k].depth_path));
    }
    const auto log = nlohmann::json::parse(io::read_file(dir / "out/synth_log.json"));
    EXPECT_EQ(log.at("records").size(), 6u);
}

TEST(Pipeline, RejectedFirstAttemptIsRetried) {
    test::TempDir dir;
    const auto renders = test::write_render_stubs(dir / "in", 3);
    const auto cfg = fast_config();
    std::set<std::uint64_t> first;
    for (const auto& r : renders) first.insert(attempt_seed(cfg.seed, r.record_id, 1));
    const auto port = distorting_generators(mock_generators(), [&](std::uint64_t s) { return first.count(s) > 0; });
    const auto res = run_pipeline(renders, cfg, port, dir / "out");
    EXPECT_EQ(res.dropped, 0u);
    for (const auto& o : res.outcomes) {
        ASSERT_GE(o.attempts.size(), 2u);
        EXPECT_FALSE(o.attempts[0].accepted);
        EXPECT_LT(o.attempts[0].iou, kDefaultKappa);
        EXPECT_TRUE(o.attempts.back().accepted);
    }
    for (const auto& r : res.manifest.records) EXPECT_GE(r.attempts, 2u);
}

TEST(Pipeline, AlwaysDistortedDropsEverything) {
    test::TempDir dir;
    const auto renders = test::write_render_stubs(dir / "in", 4);
    auto cfg = fast_config();
    cfg.max_retries = 3;
    const auto port = distorting_generators(mock_generators(), [](std::uint64_t) { return true; });
    const auto res = run_pipeline(renders, cfg, port, dir / "out");
    EXPECT_EQ(res.dropped, 4u);
    EXPECT_TRUE(res.partial_failure());
    EXPECT_TRUE(res.manifest.records.empty());
    for (const auto& o : res.outcomes) {
        EXPECT_EQ(o.attempts.size(), 3u);
        EXPECT_FALSE(o.drop_reason.empty());
    }
}

TEST(Pipeline, OutputIndependentOfWorkers) {
    test::TempDir dir;
    const auto renders = test::write_render_stubs(dir / "in", 10, 3);
    auto cfg = fast_config(99);
    run_pipeline(renders, cfg, mock_generators(), dir / "w1");
    cfg.workers = 8;
    run_pipeline(renders, cfg, mock_generators(), dir / "w8");
    EXPECT_EQ(tree_bytes(dir / "w1"), tree_bytes(dir / "w8"));
    cfg.seed = 100;
    run_pipeline(renders, cfg, mock_generators(), dir / "other");
    EXPECT_NE(tree_bytes(dir / "w1"), tree_bytes(dir / "other"));
}

TEST(Pipeline, TransientGeneratorErrorsAreRetried) {
    test::TempDir dir;
    const auto renders = test::write_render_stubs(dir / "in", 2);
    auto port = mock_generators();
    std::atomic<int> failures{0};
    auto inner = port.object_appearance;
    port.object_appearance = [&, inner](const ObjectRequest& req) {
        if (failures.fetch_add(1) < 2) throw GeneratorError("busy");
        return inner(req);
    };
    const auto res = run_pipeline(renders, fast_config(), port, dir / "out");
    EXPECT_EQ(res.dropped, 0u);

    auto broken = mock_generators();
    broken.background_outpaint = [](const BackgroundRequest&) -> Image { throw GeneratorError("down"); };
    const auto res2 = run_pipeline(renders, fast_config(), broken, dir / "out2");
    EXPECT_EQ(res2.dropped, 2u);
    EXPECT_NE(res2.outcomes[0].drop_reason.find("down"), std::string::npos);
}

TEST(Config, HashAndValidation) {
    SynthConfig a, b;
    b.workers = 8;
    b.backoff_ms = 1;
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 64u);
    b.kappa = 0.9;
    EXPECT_NE(a.hash(), b.hash());
    SynthConfig bad;
    bad.kappa = 1.5;
    EXPECT_THROW(bad.validate(), ArgumentError);
    bad = {};
    bad.scene_list.clear();
    EXPECT_THROW(bad.validate(), ArgumentError);
    bad = {};
    bad.max_retries = 0;
    EXPECT_THROW(bad.validate(), ArgumentError);
}

TEST(Config, ReadFromFile) {
    test::TempDir dir;
    io::write_file(dir / "scenes.txt", "desert\n\n  harbor  \n");
    io::write_file(dir / "cfg.json", R"({"kappa": 0.9, "seed": 5, "scene_list_path": "scenes.txt"})");
    const auto cfg = read_config(dir / "cfg.json");
    EXPECT_EQ(cfg.kappa, 0.9);
    EXPECT_EQ(cfg.seed, 5u);
    EXPECT_EQ(cfg.scene_list, (std::vector<std::string>{"desert", "harbor"}));
    EXPECT_EQ(cfg.max_retries, 8u);
    io::write_file(dir / "unknown.json", R"({"kapa": 0.9})");
    EXPECT_THROW(read_config(dir / "unknown.json"), DataError);
    io::write_file(dir / "both.json", R"({"scene_list": ["a"], "scene_list_path": "scenes.txt"})");
    EXPECT_THROW(read_config(dir / "both.json"), DataError);
}

TEST(Renders, Validation) {
    test::TempDir dir;
    auto renders = test::write_render_stubs(dir.path(), 2);
    test::write_renders_file(renders, dir / "ok.json");
    EXPECT_EQ(read_renders(dir / "ok.json").size(), 2u);

    auto bad_focal = renders;
    bad_focal[0].focal_mm = 80;
    test::write_renders_file(bad_focal, dir / "focal.json");
    EXPECT_THROW(read_renders(dir / "focal.json"), DataError);

    auto bad_elev = renders;
    bad_elev[1].camera.elevation_deg = 70;
    test::write_renders_file(bad_elev, dir / "elev.json");
    EXPECT_THROW(read_renders(dir / "elev.json"), DataError);

    auto dup = renders;
    dup[1].record_id = dup[0].record_id;
    test::write_renders_file(dup, dir / "dup.json");
    EXPECT_THROW(read_renders(dir / "dup.json"), DataError);

    auto bad_id = renders;
    bad_id[0].record_id = "../escape";
    test::write_renders_file(bad_id, dir / "id.json");
    EXPECT_THROW(read_renders(dir / "id.json"), DataError);
}

TEST(Base64, RoundTrip) {
    Rng rng(1);
    for (std::size_t n = 0; n < 40; ++n) {
        std::string bytes(n, '\0');
        for (auto& c : bytes) c = static_cast<char>(rng.below(256));
        EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
    }
    EXPECT_EQ(base64_encode("hi"), "aGk=");
    EXPECT_THROW(base64_decode("abc"), DataError);
}
