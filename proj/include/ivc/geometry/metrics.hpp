#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ivc/autodiff/ops.hpp"
#include "ivc/geometry/kd_tree.hpp"
#include "ivc/geometry/point_set.hpp"

namespace ivc::geo {

/// Nearest neighbor in `targets` for every query. Uses a linear scan for small
/// problems and a kd-tree otherwise; both are exact with lowest-index ties.
inline std::vector<Neighbor> nearest_neighbors(const std::vector<Vec3>& queries, const std::vector<Vec3>& targets) {
    if (targets.empty()) throw ContractError("nearest_neighbors: empty target set");
    std::vector<Neighbor> out(queries.size());
    if (queries.size() * targets.size() <= 4096 || targets.size() <= 16) {
        for (std::size_t i = 0; i < queries.size(); ++i) out[i] = brute_force_nearest(targets, queries[i]);
        return out;
    }
    const KdTree tree(targets);
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = tree.nearest(queries[i]);
    return out;
}

/// Mean squared distance from each point of `a` to its nearest point in `b`.
inline double chamfer_single(const PointSet& a, const PointSet& b) {
    if (a.empty() || b.empty()) throw ContractError("chamfer_single: empty point set");
    double s = 0.0;
    for (const auto& n : nearest_neighbors(a.points, b.points)) s += n.sq_dist;
    return s / static_cast<double>(a.size());
}

/// Bidirectional Chamfer distance with squared per-term distances.
inline double chamfer_bi(const PointSet& a, const PointSet& b) {
    if (a.empty() || b.empty()) throw ContractError("chamfer_bi: empty point set");
    return chamfer_single(a, b) + chamfer_single(b, a);
}

/// F1 at threshold tau (Euclidean, inclusive), reported on a 0-100 scale.
inline double f1_score(const PointSet& pred, const PointSet& gt, double tau) {
    if (!(tau > 0.0)) throw ContractError("f1_score: tau must be positive");
    if (pred.empty() || gt.empty()) throw ContractError("f1_score: empty point set");
    const double t2 = tau * tau;
    std::size_t hit_p = 0, hit_r = 0;
    for (const auto& n : nearest_neighbors(pred.points, gt.points)) hit_p += n.sq_dist <= t2;
    for (const auto& n : nearest_neighbors(gt.points, pred.points)) hit_r += n.sq_dist <= t2;
    const double precision = 100.0 * static_cast<double>(hit_p) / static_cast<double>(pred.size());
    const double recall = 100.0 * static_cast<double>(hit_r) / static_cast<double>(gt.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

/// Greedy farthest point sampling from `seed_index`. Returns selected indices
/// in selection order; ties go to the lowest index.
inline std::vector<std::size_t> fps_indices(const std::vector<Vec3>& points, std::size_t k, std::size_t seed_index) {
    const std::size_t n = points.size();
    if (k < 1 || k > n)
        throw ContractError("fps: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
    if (seed_index >= n) throw ContractError("fps: seed index out of range");
    std::vector<std::size_t> picked;
    picked.reserve(k);
    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    std::size_t current = seed_index;
    for (std::size_t step = 0; step < k; ++step) {
        picked.push_back(current);
        min_d[current] = -1.0;  // mark as selected
        std::size_t next = n;
        double best = -1.0;
        const Vec3 c = points[current];
        for (std::size_t i = 0; i < n; ++i) {
            if (min_d[i] < 0.0) continue;
            const double d = squared_distance(points[i], c);
            if (d < min_d[i]) min_d[i] = d;
            if (min_d[i] > best) {
                best = min_d[i];
                next = i;
            }
        }
        if (next == n) break;
        current = next;
    }
    return picked;
}

inline PointSet fps(const PointSet& p, std::size_t k, std::size_t seed_index) {
    return p.select(fps_indices(p.points, k, seed_index));
}

/// Scalar Huber function; delta defaults to a quarter of the unit-sphere radius.
inline double huber(double t, double delta = 0.25) {
    if (!(delta > 0.0)) throw ContractError("huber: delta must be positive");
    return ad::huber_value(t, delta);
}

}  // namespace ivc::geo
