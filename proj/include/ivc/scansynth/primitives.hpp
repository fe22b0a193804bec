#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "ivc/scansynth/mesh.hpp"

namespace ivc::scan {

enum class Family { box, ellipsoid, capsule_couch };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::box: return "box";
        case Family::ellipsoid: return "ellipsoid";
        case Family::capsule_couch: return "capsule-couch";
    }
    return "box";
}

inline Family parse_family(const std::string& s) {
    if (s == "box") return Family::box;
    if (s == "ellipsoid") return Family::ellipsoid;
    if (s == "capsule-couch" || s == "capsule") return Family::capsule_couch;
    throw ConfigError("unknown primitive family '" + s + "' (expected box, ellipsoid or capsule-couch)");
}

/// Maps a point q on the surface of the cube [-1, 1]^3 to the primitive's
/// surface in its raw (unnormalized) frame. The cube point is the shared
/// parameterization: equal q means the same semantic point on every
/// instance of a family.
inline Vec3 primitive_map(Family f, const std::array<double, 3>& params, const Vec3& q) {
    switch (f) {
        case Family::box: return Vec3(params[0] * q.x(), params[1] * q.y(), params[2] * q.z());
        case Family::ellipsoid: {
            const Vec3 s = q.normalized();
            return Vec3(params[0] * s.x(), params[1] * s.y(), params[2] * s.z());
        }
        case Family::capsule_couch: {
            // params: half-length of the straight section, radius, vertical squash.
            const Vec3 s = q.normalized();
            return Vec3(params[1] * s.x() + params[0] * q.x(), params[1] * s.y(), params[1] * params[2] * s.z());
        }
    }
    return q;
}

/// One generated instance: parameters, normalized mesh and the transform from
/// the raw frame into the normalized frame.
struct PrimitiveShape {
    Family family = Family::box;
    std::array<double, 3> params{};
    TriangleMesh mesh;
    NormalizeTransform transform;

    /// Cube-surface parameter -> normalized-frame surface point.
    Vec3 map(const Vec3& q) const { return transform.apply(primitive_map(family, params, q)); }
};

/// Watertight tessellation of the cube surface with `subdiv` quads per edge
/// per face, outward-oriented, vertices shared along cube edges.
inline std::pair<std::vector<Vec3>, std::vector<Triangle>> cube_surface_grid(int subdiv) {
    if (subdiv < 1) throw ContractError("cube_surface_grid: subdiv must be positive");
    std::map<std::tuple<int, int, int>, std::uint32_t> ids;
    std::vector<Vec3> verts;
    std::vector<Triangle> tris;
    auto vertex = [&](std::array<int, 3> lattice) {
        const auto key = std::make_tuple(lattice[0], lattice[1], lattice[2]);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        const auto id = static_cast<std::uint32_t>(verts.size());
        verts.emplace_back(2.0 * lattice[0] / subdiv - 1.0, 2.0 * lattice[1] / subdiv - 1.0, 2.0 * lattice[2] / subdiv - 1.0);
        ids.emplace(key, id);
        return id;
    };
    // (normal axis, sign, u axis, v axis) with u x v pointing outward.
    const int faces[6][4] = {{0, 1, 1, 2}, {0, -1, 2, 1}, {1, 1, 2, 0}, {1, -1, 0, 2}, {2, 1, 0, 1}, {2, -1, 1, 0}};
    for (const auto& f : faces) {
        auto at = [&](int i, int j) {
            std::array<int, 3> l{};
            l[static_cast<std::size_t>(f[0])] = f[1] > 0 ? subdiv : 0;
            l[static_cast<std::size_t>(f[2])] = i;
            l[static_cast<std::size_t>(f[3])] = j;
            return vertex(l);
        };
        for (int i = 0; i < subdiv; ++i)
            for (int j = 0; j < subdiv; ++j) {
                const auto a = at(i, j), b = at(i + 1, j), c = at(i + 1, j + 1), d = at(i, j + 1);
                tris.push_back({a, b, c});
                tris.push_back({a, c, d});
            }
    }
    return {std::move(verts), std::move(tris)};
}

inline PrimitiveShape make_primitive(Family family, const std::array<double, 3>& params, int subdiv = 12) {
    auto [cube, tris] = cube_surface_grid(subdiv);
    TriangleMesh raw;
    raw.triangles = std::move(tris);
    raw.vertices.reserve(cube.size());
    for (const auto& q : cube) raw.vertices.push_back(primitive_map(family, params, q));
    auto [mesh, xf] = normalize_mesh(std::move(raw));
    return {family, params, std::move(mesh), xf};
}

/// Parameter ranges per family, drawn uniformly.
inline std::array<double, 3> draw_params(Family family, std::mt19937_64& rng) {
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    switch (family) {
        case Family::box:  // half-extents; pairwise aspect ratios stay in [0.5, 2]
            return {u(0.5, 1.0), u(0.5, 1.0), u(0.5, 1.0)};
        case Family::ellipsoid: return {u(0.5, 1.0), u(0.5, 1.0), u(0.5, 1.0)};
        case Family::capsule_couch: return {u(0.2, 0.6), u(0.3, 0.5), u(0.6, 1.0)};
    }
    return {1.0, 1.0, 1.0};
}

inline std::vector<PrimitiveShape> gen_primitive_corpus(std::size_t n_instances, Family family, std::uint64_t seed,
                                                        int subdiv = 12) {
    if (n_instances < 1) throw ContractError("gen_primitive_corpus: need at least one instance");
    std::mt19937_64 rng(seed);
    std::vector<PrimitiveShape> out;
    out.reserve(n_instances);
    for (std::size_t i = 0; i < n_instances; ++i) out.push_back(make_primitive(family, draw_params(family, rng), subdiv));
    return out;
}

/// Uniform face, uniform position on the face of the parameter cube.
inline Vec3 sample_cube_surface(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> face(0, 5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int f = face(rng);
    Vec3 q(u(rng), u(rng), u(rng));
    q[f / 2] = f % 2 == 0 ? 1.0 : -1.0;
    return q;
}

}  // namespace ivc::scan
