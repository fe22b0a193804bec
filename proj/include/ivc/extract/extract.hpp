#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <vector>

#include "ivc/common/parallel.hpp"
#include "ivc/extract/mc_tables.hpp"
#include "ivc/geometry/kd_tree.hpp"
#include "ivc/scansynth/mesh.hpp"
#include "ivc/templateinr/projection.hpp"

namespace ivc::extract {

using ad::Tensor;
using inr::FieldFn;

/// 10 projection steps, keep d < 5e-3, candidates in the unit ball.
inline inr::ProjectionConfig point_projection_defaults() {
    inr::ProjectionConfig c;
    c.iterations = 10;
    return c;
}

/// Dense points on the zero level set of a field. Throws when no candidate
/// converges, reporting the field statistics.
inline geo::PointSet project_points(const FieldFn& field, std::size_t n, std::uint64_t seed,
                                    const inr::ProjectionConfig& cfg = point_projection_defaults()) {
    auto res = inr::project_to_level_set(field, n, cfg, seed);
    if (res.points.empty())
        throw NumericError("project_points: none of " + std::to_string(cfg.n_candidates) +
                           " candidates reached the level set (mean final field value " +
                           std::to_string(res.mean_final_value) + ", tolerance " + std::to_string(cfg.level_tol) + ")");
    return std::move(res.points);
}

/// T(D(x; code)) with theta_T held fixed.
inline geo::PointSet project_points(inr::TemplateNet& net, const Tensor& code, std::size_t n, std::uint64_t seed,
                                    const inr::ProjectionConfig& cfg = point_projection_defaults()) {
    ad::GradPause pause({&net.theta_t()});
    const Tensor c = code.detach();
    return project_points([&net, &c](const Tensor& x) { return net.field(x, c); }, n, seed, cfg);
}

/// r^3 field samples on a regular grid over [lo, hi]^3, x index fastest.
struct FieldGrid {
    std::size_t resolution = 0;
    double lo = -1.1, hi = 1.1;
    std::vector<double> values;

    double spacing() const { return (hi - lo) / static_cast<double>(resolution - 1); }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (k * resolution + j) * resolution + i;
    }
    Vec3 position(std::size_t i, std::size_t j, std::size_t k) const {
        const double h = spacing();
        return Vec3(lo + h * static_cast<double>(i), lo + h * static_cast<double>(j), lo + h * static_cast<double>(k));
    }
};

/// Evaluates the field on the grid in chunks of one z-slab; slabs run in parallel.
inline FieldGrid evaluate_grid(const FieldFn& field, std::size_t resolution, std::size_t threads = 1, double lo = -1.1,
                               double hi = 1.1) {
    if (resolution < 8) throw ConfigError("evaluate_grid: resolution must be at least 8");
    if (!(hi > lo)) throw ConfigError("evaluate_grid: empty bounds");
    FieldGrid g;
    g.resolution = resolution;
    g.lo = lo;
    g.hi = hi;
    g.values.assign(resolution * resolution * resolution, 0.0);
    parallel_for(resolution, threads, [&](std::size_t k) {
        std::vector<Vec3> pts;
        pts.reserve(resolution * resolution);
        for (std::size_t j = 0; j < resolution; ++j)
            for (std::size_t i = 0; i < resolution; ++i) pts.push_back(g.position(i, j, k));
        const auto v = inr::field_values(field, pts);
        for (std::size_t n = 0; n < v.size(); ++n) {
            if (!(v[n] >= 0.0)) throw NumericError("evaluate_grid: field value is negative or non-finite");
            g.values[k * resolution * resolution + n] = v[n];
        }
    });
    return g;
}

struct McResult {
    scan::TriangleMesh mesh;
    bool empty = true;  // the eps level set does not cross the grid
};

/// Marching cubes on (values - eps). Vertices are shared between cells via
/// a global edge id, so each closed component comes out watertight.
inline McResult mc_mesh(const FieldGrid& grid, double eps) {
    const std::size_t r = grid.resolution;
    if (r < 2 || grid.values.size() != r * r * r) throw ContractError("mc_mesh: grid is not computed");
    static constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                          {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    static constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                         {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
    McResult out;
    std::unordered_map<std::size_t, std::uint32_t> vertex_of_edge;
    auto edge_vertex = [&](std::size_t i, std::size_t j, std::size_t k, int e) -> std::uint32_t {
        const int* a = kCorner[kEdge[e][0]];
        const int* b = kCorner[kEdge[e][1]];
        // Global id: lower grid corner of the edge, times 3, plus its axis.
        const std::size_t ai = i + static_cast<std::size_t>(std::min(a[0], b[0]));
        const std::size_t aj = j + static_cast<std::size_t>(std::min(a[1], b[1]));
        const std::size_t ak = k + static_cast<std::size_t>(std::min(a[2], b[2]));
        const std::size_t axis = a[0] != b[0] ? 0 : (a[1] != b[1] ? 1 : 2);
        const std::size_t id = grid.index(ai, aj, ak) * 3 + axis;
        auto [it, inserted] = vertex_of_edge.try_emplace(id, 0);
        if (!inserted) return it->second;
        const std::size_t pi = i + static_cast<std::size_t>(a[0]), pj = j + static_cast<std::size_t>(a[1]),
                          pk = k + static_cast<std::size_t>(a[2]);
        const std::size_t qi = i + static_cast<std::size_t>(b[0]), qj = j + static_cast<std::size_t>(b[1]),
                          qk = k + static_cast<std::size_t>(b[2]);
        const double va = grid.values[grid.index(pi, pj, pk)] - eps;
        const double vb = grid.values[grid.index(qi, qj, qk)] - eps;
        const double t = va == vb ? 0.5 : va / (va - vb);
        const Vec3 pa = grid.position(pi, pj, pk), pb = grid.position(qi, qj, qk);
        it->second = static_cast<std::uint32_t>(out.mesh.vertices.size());
        out.mesh.vertices.push_back(pa + t * (pb - pa));
        return it->second;
    };
    for (std::size_t k = 0; k + 1 < r; ++k)
        for (std::size_t j = 0; j + 1 < r; ++j)
            for (std::size_t i = 0; i + 1 < r; ++i) {
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    const auto v = grid.values[grid.index(i + static_cast<std::size_t>(kCorner[c][0]),
                                                          j + static_cast<std::size_t>(kCorner[c][1]),
                                                          k + static_cast<std::size_t>(kCorner[c][2]))];
                    if (v - eps < 0.0) cube |= 1 << c;
                }
                if (mc::kEdgeTable[cube] == 0) continue;
                for (int t = 0; mc::kTriTable[cube][t] != -1; t += 3) {
                    const std::uint32_t a = edge_vertex(i, j, k, mc::kTriTable[cube][t]);
                    const std::uint32_t b = edge_vertex(i, j, k, mc::kTriTable[cube][t + 1]);
                    const std::uint32_t c = edge_vertex(i, j, k, mc::kTriTable[cube][t + 2]);
                    if (a == b || b == c || c == a) continue;
                    out.mesh.triangles.push_back({a, b, c});
                }
            }
    out.empty = out.mesh.triangles.empty();
    return out;
}

/// Warps `points` with `code` into the template space (theta_T held fixed).
inline std::vector<Vec3> to_template_space(inr::TemplateNet& net, const std::vector<Vec3>& points, const Tensor& code) {
    ad::GradPause pause({&net.theta_t()});
    std::vector<double> flat;
    flat.reserve(points.size() * 3);
    for (const auto& p : points) flat.insert(flat.end(), {p.x(), p.y(), p.z()});
    const Tensor w = net.warp(Tensor({points.size(), 3}, std::move(flat)), code.detach());
    return geo::from_tensor(w).points;
}

/// For each query point of shape A: its nearest neighbour, in template
/// space, among shape B's points, returned at B's original position.
inline geo::PointSet correspondences(const std::vector<Vec3>& query_canonical, const std::vector<Vec3>& target,
                                     const std::vector<Vec3>& target_canonical) {
    if (target.empty() || target.size() != target_canonical.size())
        throw ContractError("correspondences: target points and their template-space images differ in count");
    const geo::KdTree tree(target_canonical);
    geo::PointSet out;
    out.points.reserve(query_canonical.size());
    for (const auto& q : query_canonical) out.points.push_back(target[tree.nearest(q).index]);
    return out;
}

inline geo::PointSet correspondences(inr::TemplateNet& net, const geo::PointSet& query, const Tensor& code_a,
                                     const geo::PointSet& target, const Tensor& code_b) {
    return correspondences(to_template_space(net, query.points, code_a), target.points,
                           to_template_space(net, target.points, code_b));
}

}  // namespace ivc::extract
