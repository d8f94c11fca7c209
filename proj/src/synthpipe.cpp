// SPDX-License-Identifier: Apache-2.0
#include "occlukit/synthpipe.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/core.h>
#include <openssl/evp.h>

#include "occlukit/io.hpp"
#include "occlukit/maskops.hpp"
#include "occlukit/parallel.hpp"
#include "occlukit/rng.hpp"

namespace occlukit::synth {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> default_colors() {
    return {"red",   "pink",  "orange", "yellow", "green", "blue",
            "purple", "brown", "white",  "black",  "gray",  ""};
}

std::vector<std::string> default_materials() {
    return {"metal", "wood", "plastic", "ceramic", "stone", "rubber", "leather", ""};
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string join_words(std::initializer_list<std::string_view> words) {
    std::string out;
    for (auto w : words) {
        std::istringstream in{std::string(w)};
        std::string token;
        while (in >> token) {
            if (!out.empty()) out += ' ';
            out += token;
        }
    }
    return out;
}

}  // namespace

std::string build_object_prompt(std::string_view color, std::string_view material,
                                std::string_view object) {
    if (trim(object).empty()) throw ArgumentError("object word must be nonempty");
    return join_words({"a", color, material, object});
}

std::string build_scene_prompt(std::string_view object, std::string_view scene) {
    if (trim(object).empty() || trim(scene).empty()) {
        throw ArgumentError("scene prompt needs a nonempty object and scene");
    }
    return join_words({"a", object, "in the", scene});
}

Image perturb_guidance(const Image& rendered, double noise_strength, std::uint64_t seed) {
    if (!(noise_strength >= 0.0 && noise_strength <= 1.0)) {
        throw ArgumentError(fmt::format("noise strength {} outside [0, 1]", noise_strength));
    }
    Image out = rendered;
    if (noise_strength == 0.0) return out;
    const double sigma = noise_strength * 255.0 * 0.5;
    Rng rng(seed);
    for (auto& v : out.data) {
        const double x = std::round(v + sigma * rng.normal());
        v = static_cast<std::uint8_t>(std::clamp(x, 0.0, 255.0));
    }
    return out;
}

double silhouette_iou(const Image& fg_img, const Mask& render_mask) {
    if (fg_img.width != render_mask.width || fg_img.height != render_mask.height) {
        throw DataError(fmt::format("image is {}x{} but render mask is {}x{}", fg_img.width,
                                    fg_img.height, render_mask.width, render_mask.height));
    }
    return maskops::iou(maskops::extract_silhouette(fg_img), render_mask);
}

bool is_filtered(const Image& fg_img, const Mask& render_mask, double kappa) {
    return silhouette_iou(fg_img, render_mask) < kappa;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view record_id,
                          std::string_view stream, std::uint32_t index) {
    // Length-prefixed fields so no two distinct tuples share a preimage.
    std::string msg;
    auto put_u64 = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) msg.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
    };
    put_u64(base_seed);
    put_u64(record_id.size());
    msg.append(record_id);
    put_u64(stream.size());
    msg.append(stream);
    put_u64(index);

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(msg.data(), msg.size(), digest, &len, EVP_sha256(), nullptr);
    std::uint64_t seed = 0;
    for (int b = 0; b < 8; ++b) seed |= static_cast<std::uint64_t>(digest[b]) << (8 * b);
    return seed;
}

// --- mock generators -----------------------------------------------------------

namespace {

std::array<double, 3> keyed_color(std::uint64_t key, int lo, int span) {
    std::array<double, 3> c{};
    for (int ch = 0; ch < 3; ++ch) {
        c[ch] = lo + static_cast<double>(((key >> (16 * ch)) & 0xFFFF) % static_cast<unsigned>(span));
    }
    return c;
}

Image mock_object(const ObjectRequest& req) {
    const auto& depth = req.depth;
    const auto& guide = req.guidance;
    if (guide.width != depth.width || guide.height != depth.height) {
        throw DataError("guidance and depth resolutions differ");
    }
    float dmin = std::numeric_limits<float>::infinity(), dmax = -dmin;
    for (float d : depth.data) {
        if (std::isfinite(d) && d > 0.0f) {
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
    }
    const auto base = keyed_color(mix64(fnv1a64(req.prompt)), 40, 161);
    Rng rng(req.seed);
    Image out(depth.width, depth.height, 3);
    std::fill(out.data.begin(), out.data.end(), std::uint8_t{255});
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            const float d = depth.at(x, y);
            if (!(std::isfinite(d) && d > 0.0f)) continue;
            const double shade = dmax > dmin ? 1.0 - 0.35 * (d - dmin) / (dmax - dmin) : 1.0;
            const auto* g = guide.pixel(x, y);
            auto* o = out.pixel(x, y);
            for (int ch = 0; ch < 3; ++ch) {
                const double gv = guide.channels == 1 ? g[0] : g[ch];
                const double v = std::round(0.8 * base[ch] * shade + 0.2 * gv) +
                                 static_cast<double>(rng.between(-6, 6));
                // Stays well below the near-white background band.
                o[ch] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 235.0));
            }
        }
    }
    return out;
}

Image mock_background(const BackgroundRequest& req) {
    const auto& fg = req.foreground;
    if (fg.width != req.mask.width || fg.height != req.mask.height) {
        throw DataError("foreground and mask resolutions differ");
    }
    const std::uint64_t key = mix64(fnv1a64(req.prompt));
    const auto top = keyed_color(key, 0, 256);
    const auto bottom = keyed_color(mix64(key), 0, 256);
    Rng rng(req.seed);
    Image out(fg.width, fg.height, 3);
    for (int y = 0; y < fg.height; ++y) {
        const double t = fg.height > 1 ? static_cast<double>(y) / (fg.height - 1) : 0.0;
        for (int x = 0; x < fg.width; ++x) {
            auto* o = out.pixel(x, y);
            const auto* f = fg.pixel(x, y);
            if (req.mask.at(x, y)) {
                for (int ch = 0; ch < 3; ++ch) o[ch] = fg.channels == 1 ? f[0] : f[ch];
                continue;
            }
            for (int ch = 0; ch < 3; ++ch) {
                const double v = std::round((1.0 - t) * top[ch] + t * bottom[ch]) +
                                 static_cast<double>(rng.between(-10, 10));
                o[ch] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            }
        }
    }
    return out;
}

}  // namespace

GeneratorPort mock_generators() { return {mock_object, mock_background}; }

GeneratorPort distorting_generators(GeneratorPort base,
                                    std::function<bool(std::uint64_t)> distort, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ArgumentError("fraction outside [0, 1]");
    auto inner = base.object_appearance;
    base.object_appearance = [inner, distort, fraction](const ObjectRequest& req) {
        Image img = inner(req);
        if (!distort(req.seed)) return img;
        const Mask sil = maskops::extract_silhouette(img);
        auto erase = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sil.count())));
        for (std::size_t k = sil.bits.size(); k-- > 0 && erase > 0;) {
            if (!sil.bits[k]) continue;
            auto* p = img.data.data() + k * static_cast<std::size_t>(img.channels);
            std::fill(p, p + img.channels, std::uint8_t{255});
            --erase;
        }
        return img;
    };
    return base;
}

// --- config ------------------------------------------------------------------------

void SynthConfig::validate() const {
    if (!(kappa > 0.0 && kappa <= 1.0)) throw ArgumentError(fmt::format("kappa {} outside (0, 1]", kappa));
    if (max_retries < 1) throw ArgumentError("max_retries must be at least 1");
    if (!(guidance_noise >= 0.0 && guidance_noise <= 1.0)) {
        throw ArgumentError(fmt::format("guidance_noise {} outside [0, 1]", guidance_noise));
    }
    if (color_list.empty() || material_list.empty() || scene_list.empty()) {
        throw ArgumentError("color, material and scene lists must be nonempty");
    }
    for (const auto& s : scene_list) {
        if (trim(s).empty()) throw ArgumentError("scene words must be nonempty");
    }
}

json SynthConfig::to_json() const {
    return json{{"kappa", kappa},
                {"max_retries", max_retries},
                {"guidance_noise", guidance_noise},
                {"color_list", color_list},
                {"material_list", material_list},
                {"scene_list", scene_list},
                {"seed", seed},
                {"service_retries", service_retries}};
}

std::string SynthConfig::hash() const {
    const std::string text = io::canonical_dump(to_json());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
    std::string hex;
    for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

SynthConfig read_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
    if (!j.is_object()) throw DataError(fmt::format("{}: config must be a JSON object", path.string()));
    static const std::set<std::string> known = {
            "kappa",       "max_retries",     "guidance_noise", "color_list", "material_list",
            "scene_list",  "scene_list_path", "seed",           "service_retries", "backoff_ms",
            "workers"};
    SynthConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            if (!known.count(key)) throw DataError(fmt::format("{}: unknown key '{}'", path.string(), key));
        }
        if (j.contains("kappa")) cfg.kappa = j["kappa"].get<double>();
        if (j.contains("max_retries")) cfg.max_retries = j["max_retries"].get<std::uint32_t>();
        if (j.contains("guidance_noise")) cfg.guidance_noise = j["guidance_noise"].get<double>();
        if (j.contains("color_list")) cfg.color_list = j["color_list"].get<std::vector<std::string>>();
        if (j.contains("material_list")) cfg.material_list = j["material_list"].get<std::vector<std::string>>();
        if (j.contains("scene_list")) cfg.scene_list = j["scene_list"].get<std::vector<std::string>>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("service_retries")) cfg.service_retries = j["service_retries"].get<std::uint32_t>();
        if (j.contains("backoff_ms")) cfg.backoff_ms = j["backoff_ms"].get<std::uint32_t>();
        if (j.contains("workers")) cfg.workers = j["workers"].get<unsigned>();
        if (j.contains("scene_list_path")) {
            if (j.contains("scene_list")) {
                throw DataError(fmt::format("{}: give scene_list or scene_list_path, not both", path.string()));
            }
            fs::path sp = j["scene_list_path"].get<std::string>();
            if (sp.is_relative()) sp = path.parent_path() / sp;
            std::istringstream in(io::read_file(sp));
            cfg.scene_list.clear();
            for (std::string line; std::getline(in, line);) {
                auto word = trim(line);
                if (!word.empty()) cfg.scene_list.push_back(std::move(word));
            }
        }
    } catch (const json::exception& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
    try {
        cfg.validate();
    } catch (const ArgumentError& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return cfg;
}

// --- renders -------------------------------------------------------------------------

namespace {

void check_record_id(const std::string& id) {
    const bool ok = !id.empty() && id.front() != '.' &&
                    std::all_of(id.begin(), id.end(), [](char c) {
                        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
                               c == '.';
                    });
    if (!ok) {
        throw DataError(fmt::format("record ID '{}' must be [A-Za-z0-9._-] and not start with '.'", id));
    }
}

void check_render(const io::DatasetRecord& r) {
    check_record_id(r.record_id);
    if (!(r.focal_mm >= 30.0 && r.focal_mm <= 70.0)) {
        throw DataError(fmt::format("record '{}': focal length {}mm outside [30, 70]", r.record_id,
                                    r.focal_mm));
    }
    if (r.camera.elevation_deg &&
        !(*r.camera.elevation_deg >= 5.0 && *r.camera.elevation_deg <= 65.0)) {
        throw DataError(fmt::format("record '{}': elevation {} degrees outside [5, 65]", r.record_id,
                                    *r.camera.elevation_deg));
    }
    if (r.category.empty()) throw DataError(fmt::format("record '{}': empty category", r.record_id));
}

}  // namespace

std::vector<io::DatasetRecord> read_renders(const fs::path& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
    const json& arr = j.is_object() && j.contains("records") ? j.at("records") : j;
    if (!arr.is_array()) throw DataError(fmt::format("{}: expected an array of render records", path.string()));
    std::vector<io::DatasetRecord> out;
    std::set<std::string> seen;
    const auto base = path.parent_path();
    for (const auto& rj : arr) {
        auto r = io::record_from_json(rj);
        check_render(r);
        if (!seen.insert(r.record_id).second) {
            throw DataError(fmt::format("{}: duplicate record ID '{}'", path.string(), r.record_id));
        }
        for (auto* p : {&r.depth_path, &r.mask_path, &r.image_path}) {
            fs::path fp(*p);
            if (fp.is_relative()) *p = (base / fp).string();
        }
        out.push_back(std::move(r));
    }
    return out;
}

// --- pipeline ------------------------------------------------------------------------

namespace {

/// Calls a generator, retrying GeneratorError with exponential backoff.
/// Returns nullopt (and fills `error`) once retries are exhausted.
template <typename Call>
std::optional<Image> call_with_retries(const SynthConfig& cfg, Call&& call, std::string& error) {
    for (std::uint32_t r = 0;; ++r) {
        try {
            return call();
        } catch (const GeneratorError& e) {
            error = e.what();
            if (r >= cfg.service_retries) return std::nullopt;
            const auto wait = std::chrono::milliseconds(static_cast<std::int64_t>(cfg.backoff_ms) << std::min(r, 16u));
            std::this_thread::sleep_for(wait);
        }
    }
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& list) {
    return list[static_cast<std::size_t>(rng.below(list.size()))];
}

struct RecordWork {
    RecordOutcome outcome;
    std::optional<io::DatasetRecord> record;
};

RecordWork process_record(const io::DatasetRecord& render, const SynthConfig& cfg,
                          const GeneratorPort& port, const fs::path& out_dir) {
    RecordWork work;
    auto& outcome = work.outcome;
    outcome.record_id = render.record_id;
    const std::string& id = render.record_id;

    const std::string depth_bytes = io::read_file(render.depth_path);
    const FloatRaster depth = io::decode_pfm(depth_bytes, render.depth_path);
    const Mask mask = io::read_mask_pgm(render.mask_path);
    const Image rendered = io::read_image(render.image_path);
    const auto& K = render.camera.intrinsics;
    for (auto [w, h, what] : {std::tuple{depth.width, depth.height, "depth"},
                              std::tuple{mask.width, mask.height, "mask"},
                              std::tuple{rendered.width, rendered.height, "image"}}) {
        if (w != K.width || h != K.height) {
            throw DataError(fmt::format("record '{}': {} is {}x{}, camera is {}x{}", id, what, w, h,
                                        K.width, K.height));
        }
    }

    const Image guidance =
            perturb_guidance(rendered, cfg.guidance_noise, derive_seed(cfg.seed, id, "guidance", 0));

    std::optional<Image> accepted;
    io::Prompts prompts;
    std::uint32_t attempts = 0;
    for (std::uint32_t attempt = 1; attempt <= cfg.max_retries; ++attempt) {
        AttemptLog log;
        log.attempt = attempt;
        log.seed = attempt_seed(cfg.seed, id, attempt);
        Rng rng(log.seed);
        const auto& color = pick(rng, cfg.color_list);
        const auto& material = pick(rng, cfg.material_list);
        log.prompt = build_object_prompt(color, material, render.category);

        std::string error;
        auto fg = call_with_retries(
                cfg,
                [&] {
                    Image img = port.object_appearance(ObjectRequest{depth, guidance, log.prompt, log.seed});
                    if (img.width != depth.width || img.height != depth.height) {
                        throw GeneratorError(fmt::format("object generator returned {}x{} for a {}x{} request",
                                                         img.width, img.height, depth.width, depth.height));
                    }
                    return img;
                },
                error);
        attempts = attempt;
        if (!fg) {
            log.error = error;
            outcome.attempts.push_back(std::move(log));
            outcome.drop_reason = fmt::format("object generator failed: {}", error);
            return work;
        }
        log.iou = silhouette_iou(*fg, mask);
        log.accepted = !(log.iou < cfg.kappa);
        outcome.attempts.push_back(log);
        if (log.accepted) {
            accepted = std::move(fg);
            prompts.object = log.prompt;
            break;
        }
    }
    if (!accepted) {
        outcome.drop_reason = fmt::format("silhouette IoU below {} on all {} attempts", cfg.kappa,
                                          cfg.max_retries);
        return work;
    }

    Rng scene_rng(derive_seed(cfg.seed, id, "scene", 0));
    prompts.scene = build_scene_prompt(render.category, pick(scene_rng, cfg.scene_list));
    std::string error;
    auto final_img = call_with_retries(
            cfg,
            [&] {
                Image img = port.background_outpaint(BackgroundRequest{
                        *accepted, mask, prompts.scene, derive_seed(cfg.seed, id, "outpaint", 0)});
                if (img.width != accepted->width || img.height != accepted->height) {
                    throw GeneratorError("outpainter changed the image resolution");
                }
                return img;
            },
            error);
    if (!final_img) {
        outcome.drop_reason = fmt::format("background generator failed: {}", error);
        return work;
    }
    // Whatever the backend did, the object's pixels are restored verbatim.
    Image out = maskops::to_rgb(*final_img);
    const Image fg_rgb = maskops::to_rgb(*accepted);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.at(x, y)) std::copy_n(fg_rgb.pixel(x, y), 3, out.pixel(x, y));
        }
    }

    io::DatasetRecord rec = render;
    rec.depth_path = fmt::format("depth/{}.pfm", id);
    rec.mask_path = fmt::format("masks/{}.pgm", id);
    rec.image_path = fmt::format("images/{}.png", id);
    rec.attempts = attempts;
    rec.prompts = prompts;
    outcome.foreground_path = fmt::format("fg/{}.png", id);

    io::write_file(out_dir / rec.depth_path, depth_bytes);
    io::write_mask_pgm(mask, out_dir / rec.mask_path);
    io::write_file(out_dir / rec.image_path, io::encode_png(out));
    io::write_file(out_dir / outcome.foreground_path, io::encode_png(*accepted));

    outcome.accepted = true;
    work.record = std::move(rec);
    return work;
}

}  // namespace

json outcomes_to_json(const std::vector<RecordOutcome>& outcomes) {
    json arr = json::array();
    for (const auto& o : outcomes) {
        json attempts = json::array();
        for (const auto& a : o.attempts) {
            json aj{{"attempt", a.attempt},
                    {"seed", a.seed},
                    {"prompt", a.prompt},
                    {"iou", io::round_sig9(a.iou)},
                    {"accepted", a.accepted}};
            if (!a.error.empty()) aj["error"] = a.error;
            attempts.push_back(std::move(aj));
        }
        json oj{{"record_id", o.record_id}, {"accepted", o.accepted}, {"attempts", std::move(attempts)}};
        if (!o.drop_reason.empty()) oj["drop_reason"] = o.drop_reason;
        if (!o.foreground_path.empty()) oj["foreground_path"] = o.foreground_path;
        arr.push_back(std::move(oj));
    }
    return arr;
}

SynthResult run_pipeline(const std::vector<io::DatasetRecord>& renders, const SynthConfig& cfg,
                         const GeneratorPort& port, const fs::path& out_dir) {
    cfg.validate();
    if (!port.object_appearance || !port.background_outpaint) {
        throw ArgumentError("generator port is missing a service");
    }
    std::set<std::string> seen;
    for (const auto& r : renders) {
        check_render(r);
        if (!seen.insert(r.record_id).second) {
            throw DataError(fmt::format("duplicate record ID '{}'", r.record_id));
        }
    }

    // Each worker writes only its own slots; results are gathered afterwards.
    std::vector<RecordWork> slots(renders.size());
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::min<std::size_t>(cfg.workers == 0 ? default_workers() : cfg.workers,
                                                   std::max<std::size_t>(renders.size(), 1));
    parallel_for(workers, workers, [&](std::size_t, std::size_t) {
        for (std::size_t k = next++; k < renders.size(); k = next++) {
            slots[k] = process_record(renders[k], cfg, port, out_dir);
        }
    });

    SynthResult result;
    result.manifest.seed = cfg.seed;
    result.manifest.pipeline_config_hash = cfg.hash();
    for (auto& s : slots) {
        if (s.record) {
            result.manifest.records.push_back(std::move(*s.record));
        } else {
            ++result.dropped;
        }
        result.outcomes.push_back(std::move(s.outcome));
    }
    std::sort(result.manifest.records.begin(), result.manifest.records.end(),
              [](const auto& a, const auto& b) { return a.record_id < b.record_id; });

    io::write_manifest(result.manifest, out_dir / "manifest.json");
    io::write_file(out_dir / "synth_log.json",
                   io::canonical_dump(json{{"pipeline_config_hash", result.manifest.pipeline_config_hash},
                                           {"dropped", result.dropped},
                                           {"records", outcomes_to_json(result.outcomes)}}));
    return result;
}

}  // namespace occlukit::synth
