#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ivc/common/binary_io.hpp"
#include "ivc/scansynth/mesh.hpp"

namespace ivc::scan {

namespace detail {

inline std::uint32_t resolve_obj_index(long idx, std::size_t n_vertices, const std::string& path) {
    long resolved = idx > 0 ? idx - 1 : static_cast<long>(n_vertices) + idx;
    if (idx == 0 || resolved < 0 || resolved >= static_cast<long>(n_vertices))
        throw IoError(path + ": face index " + std::to_string(idx) + " out of range");
    return static_cast<std::uint32_t>(resolved);
}

}  // namespace detail

/// Wavefront OBJ: `v` and `f` records only; polygons are fan-triangulated.
inline TriangleMesh read_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    TriangleMesh m;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x() >> v.y() >> v.z())) throw IoError(path.string() + ": malformed vertex line");
            m.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<std::uint32_t> poly;
            std::string tok;
            while (ls >> tok) {
                const long idx = std::stol(tok.substr(0, tok.find('/')));
                poly.push_back(detail::resolve_obj_index(idx, m.vertices.size(), path.string()));
            }
            if (poly.size() < 3) throw IoError(path.string() + ": face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) m.triangles.push_back({poly[0], poly[k], poly[k + 1]});
        }
    }
    return m;
}

namespace detail {

struct PlyProperty {
    std::string name, type, count_type;  // count_type non-empty for list properties
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

inline std::size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
    if (t == "double" || t == "float64") return 8;
    throw IoError("ply: unknown property type '" + t + "'");
}

inline double ply_read_binary(std::istream& in, const std::string& t, const std::string& path) {
    auto get = [&](auto tag) {
        using T = decltype(tag);
        return static_cast<double>(bin::get<T>(in, path));
    };
    if (t == "char" || t == "int8") return get(std::int8_t{});
    if (t == "uchar" || t == "uint8") return get(std::uint8_t{});
    if (t == "short" || t == "int16") return get(std::int16_t{});
    if (t == "ushort" || t == "uint16") return get(std::uint16_t{});
    if (t == "int" || t == "int32") return get(std::int32_t{});
    if (t == "uint" || t == "uint32") return get(std::uint32_t{});
    if (t == "float" || t == "float32") return get(float{});
    if (t == "double" || t == "float64") return get(double{});
    ply_type_size(t);
    return 0.0;
}

}  // namespace detail

/// PLY reader for ascii and binary_little_endian files. Reads vertex x/y/z
/// and the first list property of the face element; other data is skipped.
inline TriangleMesh read_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string p = path.string();
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw IoError(p + ": not a PLY file");
    bool binary = false;
    std::vector<detail::PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "binary_little_endian") binary = true;
            else if (fmt != "ascii") throw IoError(p + ": unsupported PLY format '" + fmt + "'");
        } else if (tag == "element") {
            detail::PlyElement e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) throw IoError(p + ": property before element");
            detail::PlyProperty prop;
            std::string type;
            ls >> type;
            if (type == "list") ls >> prop.count_type >> prop.type >> prop.name;
            else {
                prop.type = type;
                ls >> prop.name;
            }
            elements.back().props.push_back(prop);
        } else if (tag == "end_header") {
            break;
        }
    }
    TriangleMesh m;
    std::string ascii_token;
    auto read_value = [&](const std::string& type) {
        if (binary) return detail::ply_read_binary(in, type, p);
        if (!(in >> ascii_token)) throw IoError(p + ": unexpected end of file");
        return std::stod(ascii_token);
    };
    for (const auto& e : elements) {
        for (std::size_t i = 0; i < e.count; ++i) {
            Vec3 v = Vec3::Zero();
            bool face_seen = false;
            for (const auto& prop : e.props) {
                if (!prop.count_type.empty()) {
                    const auto n = static_cast<std::size_t>(read_value(prop.count_type));
                    std::vector<std::uint32_t> poly(n);
                    for (auto& idx : poly) idx = static_cast<std::uint32_t>(read_value(prop.type));
                    if (e.name == "face" && !face_seen) {
                        face_seen = true;
                        if (n < 3) throw IoError(p + ": face with fewer than 3 vertices");
                        for (std::size_t k = 1; k + 1 < n; ++k) m.triangles.push_back({poly[0], poly[k], poly[k + 1]});
                    }
                    continue;
                }
                const double val = read_value(prop.type);
                if (e.name == "vertex") {
                    if (prop.name == "x") v.x() = val;
                    else if (prop.name == "y") v.y() = val;
                    else if (prop.name == "z") v.z() = val;
                }
            }
            if (e.name == "vertex") m.vertices.push_back(v);
        }
    }
    for (const auto& t : m.triangles)
        for (auto idx : t)
            if (idx >= m.vertices.size()) throw IoError(p + ": face index out of range");
    return m;
}

/// Dispatch on extension (.obj / .ply).
inline TriangleMesh read_mesh(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".obj") return read_obj(path);
    if (ext == ".ply") return read_ply(path);
    throw IoError(path.string() + ": unsupported mesh extension (expected .obj or .ply)");
}

/// Binary little-endian PLY; faces omitted when `triangles` is empty.
inline void write_ply(const std::filesystem::path& path, const std::vector<Vec3>& vertices,
                      const std::vector<Triangle>& triangles = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << vertices.size()
        << "\nproperty float x\nproperty float y\nproperty float z\n";
    if (!triangles.empty()) out << "element face " << triangles.size() << "\nproperty list uchar int vertex_indices\n";
    out << "end_header\n";
    for (const auto& v : vertices)
        for (int k = 0; k < 3; ++k) bin::put(out, static_cast<float>(v[k]));
    for (const auto& t : triangles) {
        bin::put(out, std::uint8_t{3});
        for (auto idx : t) bin::put(out, static_cast<std::int32_t>(idx));
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline void write_ply(const std::filesystem::path& path, const TriangleMesh& m) { write_ply(path, m.vertices, m.triangles); }

}  // namespace ivc::scan
