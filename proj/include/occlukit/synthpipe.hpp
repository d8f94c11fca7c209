// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "occlukit/manifest.hpp"
#include "occlukit/raster.hpp"

/// Synthetic data generation: for every rendered view, diversify the object's
/// appearance through a generator, keep only outputs whose silhouette still
/// matches the render, then outpaint a scene background.
namespace occlukit::synth {

std::vector<std::string> default_colors();
std::vector<std::string> default_materials();

/// "a {color} {material} {object}" with empty words dropped.
std::string build_object_prompt(std::string_view color, std::string_view material,
                                std::string_view object);
/// "a {object} in the {scene}".
std::string build_scene_prompt(std::string_view object, std::string_view scene);

/// Guidance noise strength equivalent to injecting the guidance at step 8 of a
/// 20-step sampler: 1 - 8/20.
inline constexpr double kDefaultGuidanceNoise = 0.6;

/// Adds per-channel Gaussian noise with sigma = strength * 255 * 0.5, rounds
/// and clamps to [0, 255].
Image perturb_guidance(const Image& rendered, double noise_strength, std::uint64_t seed);

inline constexpr double kDefaultKappa = 0.95;

/// IoU between the extracted silhouette of fg_img and the render mask.
double silhouette_iou(const Image& fg_img, const Mask& render_mask);
/// True when silhouette_iou < kappa.
bool is_filtered(const Image& fg_img, const Mask& render_mask, double kappa = kDefaultKappa);

/// Seed of one pseudo-random stream of one record, from SHA-256 over
/// (base seed, record ID, stream name, index). Independent of processing order.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view record_id,
                          std::string_view stream, std::uint32_t index);
inline std::uint64_t attempt_seed(std::uint64_t base_seed, std::string_view record_id,
                                  std::uint32_t attempt) {
    return derive_seed(base_seed, record_id, "attempt", attempt);
}

/// Raised by generator implementations for transient service failures; the
/// pipeline retries these with backoff.
class GeneratorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ObjectRequest {
    const FloatRaster& depth;
    const Image& guidance;
    std::string prompt;
    std::uint64_t seed = 0;
};

struct BackgroundRequest {
    const Image& foreground;
    const Mask& mask;
    std::string prompt;
    std::uint64_t seed = 0;
};

/// The two generative services. Implementations must be thread-safe and
/// deterministic in (inputs, seed).
struct GeneratorPort {
    std::function<Image(const ObjectRequest&)> object_appearance;
    std::function<Image(const BackgroundRequest&)> background_outpaint;
};

/// Procedural stand-ins. The object generator paints the depth-valid region
/// with a prompt-keyed color shaded by depth on a white background; the
/// background generator fills outside the mask with a scene-keyed gradient
/// plus noise and copies masked pixels through untouched.
GeneratorPort mock_generators();

/// Wraps `base` so that object images whose seed satisfies `distort` lose the
/// last `fraction` of their silhouette pixels (row-major), painted white.
GeneratorPort distorting_generators(GeneratorPort base,
                                    std::function<bool(std::uint64_t seed)> distort,
                                    double fraction = 0.1);

/// Endpoints of a generator service speaking the JSON/base64 protocol. Each is
/// "http://host[:port][/prefix]"; the operation name is appended.
struct HttpEndpoints {
    std::string object_endpoint;
    std::string background_endpoint;
    double timeout_s = 120.0;
};

/// Port backed by HTTP services. Transport errors, non-200 replies and
/// undecodable bodies raise GeneratorError.
GeneratorPort http_generators(const HttpEndpoints& endpoints);

/// HTTP for whichever of OCCLUKIT_OBJ_ENDPOINT / OCCLUKIT_BG_ENDPOINT is set,
/// mock for the other.
GeneratorPort generators_from_env(double timeout_s = 120.0);

/// Base64 helpers used by the HTTP protocol.
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

struct SynthConfig {
    double kappa = kDefaultKappa;
    std::uint32_t max_retries = 8;
    double guidance_noise = kDefaultGuidanceNoise;
    std::vector<std::string> color_list = default_colors();
    std::vector<std::string> material_list = default_materials();
    std::vector<std::string> scene_list = {"kitchen", "living room", "canyon", "beach", "office",
                                       "forest", "street", "bedroom"};
    std::uint64_t seed = 0;
    /// Retries of a failing generator call before the record is dropped.
    std::uint32_t service_retries = 3;
    std::uint32_t backoff_ms = 50;  ///< doubled after each failed call
    /// Worker threads; does not affect any output byte.
    unsigned workers = 1;

    void validate() const;
    /// Canonical JSON of every output-affecting field (workers excluded).
    [[nodiscard]] nlohmann::json to_json() const;
    /// SHA-256 hex of to_json()'s canonical dump.
    [[nodiscard]] std::string hash() const;
};

/// Reads a JSON config. Every key is optional; unknown keys are rejected.
/// "scene_list_path" (one scene per line, blank lines skipped) may replace an
/// inline "scene_list" and resolves against the config's directory.
SynthConfig read_config(const std::filesystem::path& path);

struct AttemptLog {
    std::uint32_t attempt = 0;
    std::uint64_t seed = 0;
    std::string prompt;
    double iou = 0.0;
    bool accepted = false;
    std::string error;  ///< non-empty when the generator call failed
};

struct RecordOutcome {
    std::string record_id;
    bool accepted = false;
    std::vector<AttemptLog> attempts;
    std::string drop_reason;
    std::string foreground_path;  ///< accepted object image before outpainting
};

struct SynthResult {
    io::SynthManifest manifest;
    std::vector<RecordOutcome> outcomes;  ///< in input order
    std::size_t dropped = 0;

    [[nodiscard]] bool partial_failure() const { return dropped > 0; }
};

/// Reads render stubs: a JSON array of records (or {"records": [...]}).
/// Relative paths resolve against the file's directory. Rejects focal lengths
/// outside [30, 70] mm, elevations outside [5, 65] degrees and duplicate IDs.
std::vector<io::DatasetRecord> read_renders(const std::filesystem::path& path);

/// Runs every render through appearance diversification, silhouette
/// filtering and outpainting. Writes images/, fg/, depth/, masks/,
/// manifest.json and synth_log.json under out_dir. Manifest records are
/// sorted by record ID; every written byte depends only on the inputs and the
/// config, never on the worker count.
SynthResult run_pipeline(const std::vector<io::DatasetRecord>& renders, const SynthConfig& cfg,
                         const GeneratorPort& port, const std::filesystem::path& out_dir);

nlohmann::json outcomes_to_json(const std::vector<RecordOutcome>& outcomes);

}  // namespace occlukit::synth
