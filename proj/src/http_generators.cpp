// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>

#include "occlukit/io.hpp"
#include "occlukit/synthpipe.hpp"

#include <fmt/core.h>
#include <openssl/evp.h>

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro that
// collides with Eigen parameter names.
#include <httplib.h>

namespace occlukit::synth {

using nlohmann::json;

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw DataError("base64 text length is not a multiple of 4");
    std::string out(3 * (text.size() / 4), '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw DataError("invalid base64 text");
    // EVP_DecodeBlock counts padding as zero bytes.
    std::size_t pad = 0;
    for (std::size_t k = text.size(); k > 0 && text[k - 1] == '='; --k) ++pad;
    out.resize(static_cast<std::size_t>(n) - std::min<std::size_t>(pad, 2));
    return out;
}

namespace {

struct Endpoint {
    std::string origin;  ///< scheme://host[:port]
    std::string prefix;  ///< path without trailing slash
};

Endpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0) {
        throw ArgumentError(fmt::format("generator endpoint '{}' must start with http://", url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = url.substr(0, path_start);
    ep.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
}

Image post_for_image(const Endpoint& ep, const char* op, const json& body, double timeout_s) {
    httplib::Client client(ep.origin);
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    const std::string path = ep.prefix + "/" + op;
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        throw GeneratorError(fmt::format("POST {}{}: {}", ep.origin, path, httplib::to_string(res.error())));
    }
    if (res->status != 200) {
        throw GeneratorError(fmt::format("POST {}{}: HTTP {}", ep.origin, path, res->status));
    }
    try {
        const json reply = json::parse(res->body);
        return io::decode_png(base64_decode(reply.at("image_png_b64").get<std::string>()), op);
    } catch (const json::exception& e) {
        throw GeneratorError(fmt::format("{}: malformed reply: {}", op, e.what()));
    } catch (const DataError& e) {
        throw GeneratorError(fmt::format("{}: undecodable reply: {}", op, e.what()));
    }
}

}  // namespace

GeneratorPort http_generators(const HttpEndpoints& endpoints) {
    if (!(endpoints.timeout_s > 0.0)) throw ArgumentError("HTTP timeout must be positive");
    GeneratorPort port;
    const double timeout = endpoints.timeout_s;
    if (!endpoints.object_endpoint.empty()) {
        port.object_appearance = [ep = parse_endpoint(endpoints.object_endpoint),
                                  timeout](const ObjectRequest& req) {
            const json body{{"depth_pfm_b64", base64_encode(io::encode_pfm(req.depth))},
                            {"guidance_png_b64", base64_encode(io::encode_png(req.guidance))},
                            {"prompt", req.prompt},
                            {"seed", req.seed}};
            return post_for_image(ep, "object_appearance", body, timeout);
        };
    }
    if (!endpoints.background_endpoint.empty()) {
        port.background_outpaint = [ep = parse_endpoint(endpoints.background_endpoint),
                                    timeout](const BackgroundRequest& req) {
            const json body{{"image_png_b64", base64_encode(io::encode_png(req.foreground))},
                            {"mask_pgm_b64", base64_encode(io::encode_mask_pgm(req.mask))},
                            {"prompt", req.prompt},
                            {"seed", req.seed}};
            return post_for_image(ep, "background_outpaint", body, timeout);
        };
    }
    return port;
}

GeneratorPort generators_from_env(double timeout_s) {
    HttpEndpoints eps;
    eps.timeout_s = timeout_s;
    if (const char* v = std::getenv("OCCLUKIT_OBJ_ENDPOINT")) eps.object_endpoint = v;
    if (const char* v = std::getenv("OCCLUKIT_BG_ENDPOINT")) eps.background_endpoint = v;
    GeneratorPort port = http_generators(eps);
    const GeneratorPort mock = mock_generators();
    if (!port.object_appearance) port.object_appearance = mock.object_appearance;
    if (!port.background_outpaint) port.background_outpaint = mock.background_outpaint;
    return port;
}

}  // namespace occlukit::synth
