#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ivc/common/error.hpp"
#include "ivc/common/vec.hpp"

namespace ivc::scan {

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    bool watertight = false;  // set by validate_mesh

    Vec3 corner(std::size_t t, int k) const { return vertices[triangles[t][static_cast<std::size_t>(k)]]; }
    Vec3 normal(std::size_t t) const {
        return (corner(t, 1) - corner(t, 0)).cross(corner(t, 2) - corner(t, 0));
    }
    double area(std::size_t t) const { return 0.5 * normal(t).norm(); }
};

struct MeshReport {
    std::size_t degenerate_removed = 0;
    std::size_t boundary_edges = 0;     // used by exactly one triangle
    std::size_t nonmanifold_edges = 0;  // used by three or more
    bool watertight() const { return boundary_edges == 0 && nonmanifold_edges == 0; }
    std::string describe() const {
        return std::to_string(boundary_edges) + " boundary edges, " + std::to_string(nonmanifold_edges) +
               " non-manifold edges, " + std::to_string(degenerate_removed) + " degenerate triangles removed";
    }
};

/// Edge-use census: watertight means every undirected edge borders exactly
/// two triangles.
inline MeshReport edge_report(const TriangleMesh& m) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> uses;
    for (const auto& t : m.triangles)
        for (int k = 0; k < 3; ++k) {
            auto a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
            if (a > b) std::swap(a, b);
            ++uses[{a, b}];
        }
    MeshReport r;
    for (const auto& [edge, n] : uses) {
        if (n == 1) ++r.boundary_edges;
        if (n > 2) ++r.nonmanifold_edges;
    }
    return r;
}

/// Range-check indices, drop zero-area triangles and record watertightness.
inline MeshReport validate_mesh(TriangleMesh& m, double min_area = 1e-14) {
    if (m.vertices.empty() || m.triangles.empty()) throw ContractError("mesh: empty mesh");
    for (const auto& v : m.vertices)
        if (!all_finite(v)) throw NumericError("mesh: non-finite vertex");
    std::vector<Triangle> kept;
    kept.reserve(m.triangles.size());
    std::size_t removed = 0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        for (auto i : m.triangles[t])
            if (i >= m.vertices.size())
                throw ContractError("mesh: triangle " + std::to_string(t) + " references vertex " + std::to_string(i) +
                                    " of " + std::to_string(m.vertices.size()));
        if (m.area(t) <= min_area) {
            ++removed;
            continue;
        }
        kept.push_back(m.triangles[t]);
    }
    m.triangles = std::move(kept);
    if (m.triangles.empty()) throw ContractError("mesh: all triangles are degenerate");
    auto report = edge_report(m);
    report.degenerate_removed = removed;
    m.watertight = report.watertight();
    return report;
}

inline double surface_area(const TriangleMesh& m) {
    double a = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) a += m.area(t);
    return a;
}

/// x_normalized = (x - center) * scale
struct NormalizeTransform {
    Vec3 center = Vec3::Zero();
    double scale = 1.0;

    Vec3 apply(const Vec3& x) const { return (x - center) * scale; }
    Vec3 invert(const Vec3& y) const { return y / scale + center; }
};

inline constexpr double kNormalizeMargin = 1.03;

/// Moves the area-weighted surface centroid to the origin and scales so the
/// farthest vertex sits at radius 1/1.03. Rejects meshes that are not
/// watertight.
inline std::pair<TriangleMesh, NormalizeTransform> normalize_mesh(TriangleMesh m) {
    const auto report = validate_mesh(m);
    if (!report.watertight()) throw ContractError("normalize_mesh: mesh is not watertight (" + report.describe() + ")");
    Vec3 c = Vec3::Zero();
    double total = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const double a = m.area(t);
        c += a * (m.corner(t, 0) + m.corner(t, 1) + m.corner(t, 2)) / 3.0;
        total += a;
    }
    c /= total;
    double r = 0.0;
    for (const auto& v : m.vertices) r = std::max(r, (v - c).norm());
    if (!(r > 0.0)) throw ContractError("normalize_mesh: mesh has zero extent");
    NormalizeTransform xf{c, 1.0 / (kNormalizeMargin * r)};
    for (auto& v : m.vertices) v = xf.apply(v);
    return {std::move(m), xf};
}

}  // namespace ivc::scan
