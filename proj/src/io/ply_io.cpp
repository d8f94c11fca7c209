// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <charconv>
#include <cstring>
#include <optional>
#include <sstream>

#include <fmt/core.h>

#include "occlukit/io.hpp"

namespace occlukit::io {

namespace {

enum class ScalarType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<ScalarType> parse_type(std::string_view t) {
    if (t == "char" || t == "int8") return ScalarType::kInt8;
    if (t == "uchar" || t == "uint8") return ScalarType::kUInt8;
    if (t == "short" || t == "int16") return ScalarType::kInt16;
    if (t == "ushort" || t == "uint16") return ScalarType::kUInt16;
    if (t == "int" || t == "int32") return ScalarType::kInt32;
    if (t == "uint" || t == "uint32") return ScalarType::kUInt32;
    if (t == "float" || t == "float32") return ScalarType::kFloat32;
    if (t == "double" || t == "float64") return ScalarType::kFloat64;
    return std::nullopt;
}

std::size_t type_size(ScalarType t) {
    switch (t) {
        case ScalarType::kInt8:
        case ScalarType::kUInt8: return 1;
        case ScalarType::kInt16:
        case ScalarType::kUInt16: return 2;
        case ScalarType::kInt32:
        case ScalarType::kUInt32:
        case ScalarType::kFloat32: return 4;
        case ScalarType::kFloat64: return 8;
    }
    return 0;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::kFloat32;
    bool is_list = false;
    ScalarType count_type = ScalarType::kUInt8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

/// Pulls scalars from either the ASCII token stream or the little-endian
/// binary payload.
class ValueReader {
public:
    ValueReader(std::string_view body, bool ascii, std::string_view name)
        : body_(body), ascii_(ascii), name_(name) {}

    double read(ScalarType t) {
        if (ascii_) return read_ascii();
        const std::size_t n = type_size(t);
        if (pos_ + n > body_.size()) throw DataError(fmt::format("{}: truncated PLY body", name_));
        const char* p = body_.data() + pos_;
        pos_ += n;
        switch (t) {
            case ScalarType::kInt8: return static_cast<std::int8_t>(*p);
            case ScalarType::kUInt8: return static_cast<std::uint8_t>(*p);
            case ScalarType::kInt16: return load<std::int16_t>(p);
            case ScalarType::kUInt16: return load<std::uint16_t>(p);
            case ScalarType::kInt32: return load<std::int32_t>(p);
            case ScalarType::kUInt32: return load<std::uint32_t>(p);
            case ScalarType::kFloat32: return load<float>(p);
            case ScalarType::kFloat64: return load<double>(p);
        }
        return 0.0;
    }

private:
    template <typename T>
    static T load(const char* p) {
        T v;
        std::memcpy(&v, p, sizeof(T));
        return v;
    }

    double read_ascii() {
        while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
        const std::size_t start = pos_;
        while (pos_ < body_.size() && !std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
        if (start == pos_) throw DataError(fmt::format("{}: truncated PLY body", name_));
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(body_.data() + start, body_.data() + pos_, v);
        if (ec != std::errc{} || ptr != body_.data() + pos_) {
            throw DataError(fmt::format("{}: malformed PLY value '{}'", name_,
                                        body_.substr(start, pos_ - start)));
        }
        return v;
    }

    std::string_view body_;
    bool ascii_;
    std::string_view name_;
    std::size_t pos_ = 0;
};

}  // namespace

PlyData decode_ply(std::string_view bytes, std::string_view name) {
    static_assert(std::endian::native == std::endian::little, "PLY reader assumes little-endian host");

    const auto end_marker = bytes.find("end_header");
    if (bytes.substr(0, 3) != "ply" || end_marker == std::string_view::npos) {
        throw DataError(fmt::format("{}: not a PLY file", name));
    }
    auto body_start = bytes.find('\n', end_marker);
    if (body_start == std::string_view::npos) throw DataError(fmt::format("{}: truncated header", name));
    ++body_start;

    std::istringstream header{std::string(bytes.substr(0, end_marker))};
    std::string line;
    std::getline(header, line);  // "ply"
    bool ascii = false;
    bool have_format = false;
    std::vector<Element> elements;
    while (std::getline(header, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
        if (kw == "format") {
            std::string f;
            ls >> f;
            if (f == "ascii") {
                ascii = true;
            } else if (f == "binary_little_endian") {
                ascii = false;
            } else {
                throw DataError(fmt::format("{}: unsupported PLY format '{}'", name, f));
            }
            have_format = true;
        } else if (kw == "element") {
            Element e;
            ls >> e.name >> e.count;
            if (!ls) throw DataError(fmt::format("{}: malformed element line '{}'", name, line));
            if (e.name != "vertex" && e.name != "face") {
                throw DataError(fmt::format("{}: unsupported PLY element '{}'", name, e.name));
            }
            elements.push_back(std::move(e));
        } else if (kw == "property") {
            if (elements.empty()) throw DataError(fmt::format("{}: property before element", name));
            Property p;
            std::string t;
            ls >> t;
            if (t == "list") {
                std::string ct, it;
                ls >> ct >> it >> p.name;
                auto c = parse_type(ct);
                auto i = parse_type(it);
                if (!c || !i) throw DataError(fmt::format("{}: bad list types in '{}'", name, line));
                p.is_list = true;
                p.count_type = *c;
                p.type = *i;
            } else {
                auto s = parse_type(t);
                ls >> p.name;
                if (!s) throw DataError(fmt::format("{}: bad property type '{}'", name, t));
                p.type = *s;
            }
            elements.back().properties.push_back(std::move(p));
        } else {
            throw DataError(fmt::format("{}: unexpected header keyword '{}'", name, kw));
        }
    }
    if (!have_format) throw DataError(fmt::format("{}: missing format line", name));

    ValueReader reader(bytes.substr(body_start), ascii, name);
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    bool has_faces = false;
    bool has_vertices = false;
    for (const auto& e : elements) {
        if (e.name == "vertex") {
            has_vertices = true;
            int ix = -1, iy = -1, iz = -1;
            for (std::size_t k = 0; k < e.properties.size(); ++k) {
                const auto& pn = e.properties[k].name;
                if (pn == "x") ix = static_cast<int>(k);
                if (pn == "y") iy = static_cast<int>(k);
                if (pn == "z") iz = static_cast<int>(k);
            }
            if (ix < 0 || iy < 0 || iz < 0) {
                throw DataError(fmt::format("{}: vertex element lacks x/y/z", name));
            }
            vertices.resize(e.count);
            std::vector<double> row(e.properties.size());
            for (std::size_t v = 0; v < e.count; ++v) {
                for (std::size_t k = 0; k < e.properties.size(); ++k) {
                    const auto& p = e.properties[k];
                    if (p.is_list) {
                        const auto n = static_cast<std::size_t>(reader.read(p.count_type));
                        for (std::size_t j = 0; j < n; ++j) reader.read(p.type);
                        continue;
                    }
                    row[k] = reader.read(p.type);
                }
                vertices[v] = Vec3(row[ix], row[iy], row[iz]);
                if (!vertices[v].allFinite()) {
                    throw DataError(fmt::format("{}: vertex {} has non-finite coordinates", name, v));
                }
            }
        } else {
            has_faces = true;
            triangles.reserve(e.count);
            for (std::size_t f = 0; f < e.count; ++f) {
                for (const auto& p : e.properties) {
                    const bool indices = p.is_list && (p.name == "vertex_indices" || p.name == "vertex_index");
                    if (!p.is_list) {
                        reader.read(p.type);
                        continue;
                    }
                    const auto n = static_cast<std::size_t>(reader.read(p.count_type));
                    if (indices && n != 3) {
                        throw DataError(fmt::format(
                                "{}: face {} has {} vertices; only triangles are supported", name, f, n));
                    }
                    Triangle tri{};
                    for (std::size_t j = 0; j < n; ++j) {
                        const double idx = reader.read(p.type);
                        if (indices) {
                            if (idx < 0) throw DataError(fmt::format("{}: negative index in face {}", name, f));
                            tri[j] = static_cast<std::uint32_t>(idx);
                        }
                    }
                    if (indices) triangles.push_back(tri);
                }
            }
        }
    }
    if (!has_vertices) throw DataError(fmt::format("{}: no vertex element", name));
    if (!has_faces) return PointCloud(std::move(vertices));
    TriangleMesh mesh{std::move(vertices), std::move(triangles)};
    mesh.validate();
    return mesh;
}

PlyData read_ply(const fs::path& path) { return decode_ply(read_file(path), path.string()); }

PointCloud read_ply_points(const fs::path& path) {
    auto data = read_ply(path);
    if (auto* cloud = std::get_if<PointCloud>(&data)) return std::move(*cloud);
    return PointCloud(std::move(std::get<TriangleMesh>(data).vertices));
}

namespace {

std::string encode(const std::vector<Vec3>& vertices, const std::vector<Triangle>* triangles,
                   PlyFormat format) {
    const bool ascii = format == PlyFormat::kAscii;
    std::string out = fmt::format(
            "ply\nformat {} 1.0\nelement vertex {}\nproperty float x\nproperty float y\n"
            "property float z\n",
            ascii ? "ascii" : "binary_little_endian", vertices.size());
    if (triangles) {
        out += fmt::format("element face {}\nproperty list uchar int vertex_indices\n",
                           triangles->size());
    }
    out += "end_header\n";

    if (ascii) {
        for (const auto& v : vertices) {
            out += fmt::format("{:.9g} {:.9g} {:.9g}\n", static_cast<float>(v.x()),
                               static_cast<float>(v.y()), static_cast<float>(v.z()));
        }
        if (triangles) {
            for (const auto& t : *triangles) out += fmt::format("3 {} {} {}\n", t[0], t[1], t[2]);
        }
        return out;
    }
    auto put = [&out](auto value) {
        char buf[sizeof(value)];
        std::memcpy(buf, &value, sizeof(value));
        out.append(buf, sizeof(value));
    };
    for (const auto& v : vertices) {
        put(static_cast<float>(v.x()));
        put(static_cast<float>(v.y()));
        put(static_cast<float>(v.z()));
    }
    if (triangles) {
        for (const auto& t : *triangles) {
            put(std::uint8_t{3});
            for (auto idx : t) put(static_cast<std::int32_t>(idx));
        }
    }
    return out;
}

}  // namespace

std::string encode_ply(const TriangleMesh& mesh, PlyFormat format) {
    return encode(mesh.vertices, &mesh.triangles, format);
}

std::string encode_ply(const PointCloud& cloud, PlyFormat format) {
    return encode(cloud.points, nullptr, format);
}

void write_ply(const TriangleMesh& mesh, const fs::path& path, PlyFormat format) {
    write_file(path, encode_ply(mesh, format));
}

void write_ply(const PointCloud& cloud, const fs::path& path, PlyFormat format) {
    write_file(path, encode_ply(cloud, format));
}

}  // namespace occlukit::io
