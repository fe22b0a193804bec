#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "ivc/scansynth/mesh.hpp"

namespace ivc::scan {

/// Closest point on triangle (a, b, c) to p, by Voronoi-region classification.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

/// Ray parameter of the hit with triangle (a, b, c), or infinity.
inline double ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c) {
    constexpr double kEps = 1e-14;
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 pv = dir.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < kEps) return std::numeric_limits<double>::infinity();
    const double inv = 1.0 / det;
    const Vec3 tv = origin - a;
    const double u = tv.dot(pv) * inv;
    if (u < 0.0 || u > 1.0) return std::numeric_limits<double>::infinity();
    const Vec3 qv = tv.cross(e1);
    const double v = dir.dot(qv) * inv;
    if (v < 0.0 || u + v > 1.0) return std::numeric_limits<double>::infinity();
    return e2.dot(qv) * inv;
}

/// Bounding volume hierarchy over a subset of a mesh's triangles. Read-only
/// after construction.
class Bvh {
public:
    struct Closest {
        double distance = std::numeric_limits<double>::infinity();
        std::uint32_t triangle = 0;
        Vec3 point = Vec3::Zero();
    };

    Bvh() = default;

    Bvh(const TriangleMesh& mesh, std::vector<std::uint32_t> subset) : mesh_(&mesh), tris_(std::move(subset)) {
        if (tris_.empty()) throw ContractError("Bvh: no triangles");
        centroids_.resize(mesh.triangles.size());
        for (auto t : tris_) centroids_[t] = (mesh.corner(t, 0) + mesh.corner(t, 1) + mesh.corner(t, 2)) / 3.0;
        nodes_.reserve(2 * tris_.size() / kLeafSize + 2);
        build(0, tris_.size());
    }

    explicit Bvh(const TriangleMesh& mesh) : Bvh(mesh, all_triangles(mesh)) {}

    static std::vector<std::uint32_t> all_triangles(const TriangleMesh& mesh) {
        std::vector<std::uint32_t> all(mesh.triangles.size());
        std::iota(all.begin(), all.end(), 0u);
        return all;
    }

    /// Unsigned distance from p to the indexed triangles.
    Closest closest(const Vec3& p) const {
        Closest best;
        double best_sq = std::numeric_limits<double>::infinity();
        std::vector<std::size_t> stack{0};
        while (!stack.empty()) {
            const Node& n = nodes_[stack.back()];
            stack.pop_back();
            if (box_sq_dist(n, p) > best_sq) continue;
            if (n.leaf) {
                for (std::size_t k = n.begin; k < n.end; ++k) {
                    const auto t = tris_[k];
                    const Vec3 q = closest_point_on_triangle(p, mesh_->corner(t, 0), mesh_->corner(t, 1), mesh_->corner(t, 2));
                    const double d = (q - p).squaredNorm();
                    if (d < best_sq) {
                        best_sq = d;
                        best.triangle = t;
                        best.point = q;
                    }
                }
                continue;
            }
            const double dl = box_sq_dist(nodes_[n.left], p), dr = box_sq_dist(nodes_[n.right], p);
            if (dl < dr) {
                stack.push_back(n.right);
                stack.push_back(n.left);
            } else {
                stack.push_back(n.left);
                stack.push_back(n.right);
            }
        }
        best.distance = std::sqrt(best_sq);
        return best;
    }

    /// True if the open segment origin + t*dir, t in (t_min, t_max), crosses
    /// any indexed triangle.
    bool segment_blocked(const Vec3& origin, const Vec3& dir, double t_min, double t_max) const {
        const Vec3 inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
        std::vector<std::size_t> stack{0};
        while (!stack.empty()) {
            const Node& n = nodes_[stack.back()];
            stack.pop_back();
            if (!slab_hit(n, origin, inv, t_max)) continue;
            if (n.leaf) {
                for (std::size_t k = n.begin; k < n.end; ++k) {
                    const auto t = tris_[k];
                    const double h = ray_triangle(origin, dir, mesh_->corner(t, 0), mesh_->corner(t, 1), mesh_->corner(t, 2));
                    if (h > t_min && h < t_max) return true;
                }
                continue;
            }
            stack.push_back(n.left);
            stack.push_back(n.right);
        }
        return false;
    }

private:
    static constexpr std::size_t kLeafSize = 4;

    struct Node {
        Vec3 lo, hi;
        std::size_t begin = 0, end = 0, left = 0, right = 0;
        bool leaf = true;
    };

    std::size_t build(std::size_t begin, std::size_t end) {
        Node n;
        n.begin = begin;
        n.end = end;
        n.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        n.hi = -n.lo;
        Vec3 clo = n.lo, chi = n.hi;
        for (std::size_t k = begin; k < end; ++k) {
            const auto t = tris_[k];
            for (int c = 0; c < 3; ++c) {
                n.lo = n.lo.cwiseMin(mesh_->corner(t, c));
                n.hi = n.hi.cwiseMax(mesh_->corner(t, c));
            }
            clo = clo.cwiseMin(centroids_[t]);
            chi = chi.cwiseMax(centroids_[t]);
        }
        const std::size_t id = nodes_.size();
        nodes_.push_back(n);
        if (end - begin <= kLeafSize) return id;
        int axis = 0;
        (chi - clo).maxCoeff(&axis);
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(tris_.begin() + static_cast<std::ptrdiff_t>(begin), tris_.begin() + static_cast<std::ptrdiff_t>(mid),
                         tris_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t a, std::uint32_t b) {
                             return centroids_[a][axis] < centroids_[b][axis] ||
                                    (centroids_[a][axis] == centroids_[b][axis] && a < b);
                         });
        const std::size_t l = build(begin, mid);
        const std::size_t r = build(mid, end);
        nodes_[id].leaf = false;
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    static double box_sq_dist(const Node& n, const Vec3& p) {
        const Vec3 d = (n.lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - n.hi);
        return d.squaredNorm();
    }

    static bool slab_hit(const Node& n, const Vec3& o, const Vec3& inv, double t_max) {
        double t0 = 0.0, t1 = t_max;
        for (int a = 0; a < 3; ++a) {
            double ta = (n.lo[a] - o[a]) * inv[a];
            double tb = (n.hi[a] - o[a]) * inv[a];
            if (std::isnan(ta) || std::isnan(tb)) {
                // Ray parallel to the slab and lying exactly on a face plane.
                if (o[a] < n.lo[a] || o[a] > n.hi[a]) return false;
                continue;
            }
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return false;
        }
        return true;
    }

    const TriangleMesh* mesh_ = nullptr;
    std::vector<std::uint32_t> tris_;
    std::vector<Vec3> centroids_;
    std::vector<Node> nodes_;
};

}  // namespace ivc::scan
