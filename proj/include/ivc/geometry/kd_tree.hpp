#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "ivc/common/error.hpp"
#include "ivc/common/vec.hpp"

namespace ivc::geo {

struct Neighbor {
    std::size_t index = 0;
    double sq_dist = std::numeric_limits<double>::infinity();
};

/// Exact nearest-neighbor index over a fixed point array. Equal distances
/// resolve to the lowest original index, matching a brute-force scan.
/// Immutable after construction; concurrent queries are safe.
class KdTree {
public:
    KdTree() = default;

    explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty()) throw ContractError("KdTree: no points");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        build(0, order_.size());
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    Neighbor nearest(const Vec3& q) const {
        Neighbor best;
        search(0, q, best);
        return best;
    }

    /// True when some indexed point lies within `radius` of q (inclusive).
    bool any_within(const Vec3& q, double radius) const { return nearest(q).sq_dist <= radius * radius; }

private:
    static constexpr std::size_t kLeafSize = 8;

    struct Node {
        std::size_t begin, end;  // range in order_
        int axis = -1;           // -1 for leaves
        double split = 0.0;
        std::size_t left = 0, right = 0;
    };

    std::size_t build(std::size_t begin, std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back({begin, end});
        if (end - begin <= kLeafSize) return id;

        Vec3 lo = points_[order_[begin]], hi = lo;
        for (std::size_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             const double va = points_[a][axis], vb = points_[b][axis];
                             return va < vb || (va == vb && a < b);
                         });
        const double split = points_[order_[mid]][axis];
        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        nodes_[id].axis = axis;
        nodes_[id].split = split;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    static bool better(double d, std::size_t i, const Neighbor& best) {
        return d < best.sq_dist || (d == best.sq_dist && i < best.index);
    }

    void search(std::size_t id, const Vec3& q, Neighbor& best) const {
        const Node& n = nodes_[id];
        if (n.axis < 0) {
            for (std::size_t k = n.begin; k < n.end; ++k) {
                const std::size_t i = order_[k];
                const double d = squared_distance(q, points_[i]);
                if (better(d, i, best)) best = {i, d};
            }
            return;
        }
        // Left holds values <= split, right holds values >= split.
        const double diff = q[n.axis] - n.split;
        const std::size_t near = diff <= 0.0 ? n.left : n.right;
        const std::size_t far = diff <= 0.0 ? n.right : n.left;
        search(near, q, best);
        // Non-strict so equal-distance candidates with lower indices are visited.
        if (diff * diff <= best.sq_dist) search(far, q, best);
    }

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

/// Reference nearest neighbor by linear scan, lowest index on ties.
inline Neighbor brute_force_nearest(const std::vector<Vec3>& points, const Vec3& q) {
    Neighbor best;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = squared_distance(q, points[i]);
        if (d < best.sq_dist) best = {i, d};
    }
    return best;
}

}  // namespace ivc::geo
