#pragma once

// Brute-force reference implementations for tests and selftest. Everything here
// is a plain double loop over std::array points and shares no code with the
// metric code it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using P3 = std::array<double, 3>;

inline double sq(const P3& a, const P3& b) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

inline double min_sq(const P3& q, const std::vector<P3>& set) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : set) best = std::min(best, sq(q, p));
    return best;
}

inline double chamfer_single(const std::vector<P3>& a, const std::vector<P3>& b) {
    double s = 0.0;
    for (const auto& p : a) s += min_sq(p, b);
    return s / static_cast<double>(a.size());
}

inline double chamfer_bi(const std::vector<P3>& a, const std::vector<P3>& b) {
    return chamfer_single(a, b) + chamfer_single(b, a);
}

inline double f1(const std::vector<P3>& pred, const std::vector<P3>& gt, double tau) {
    double hp = 0, hr = 0;
    for (const auto& p : pred) hp += std::sqrt(min_sq(p, gt)) <= tau;
    for (const auto& g : gt) hr += std::sqrt(min_sq(g, pred)) <= tau;
    const double pr = 100.0 * hp / static_cast<double>(pred.size());
    const double rc = 100.0 * hr / static_cast<double>(gt.size());
    return pr + rc == 0.0 ? 0.0 : 2.0 * pr * rc / (pr + rc);
}

inline double mmd(const std::vector<P3>& completed, const std::vector<std::vector<P3>>& refs) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : refs) best = std::min(best, chamfer_bi(completed, r));
    return best;
}

/// Checks the greedy max-min property of a selection order.
inline bool fps_is_greedy(const std::vector<P3>& pts, const std::vector<std::size_t>& order) {
    for (std::size_t i = 1; i < order.size(); ++i) {
        auto dist_to_prefix = [&](std::size_t c) {
            double d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < i; ++j) d = std::min(d, sq(pts[c], pts[order[j]]));
            return d;
        };
        double best = -1.0;
        for (std::size_t c = 0; c < pts.size(); ++c) {
            if (std::find(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(i), c) !=
                order.begin() + static_cast<std::ptrdiff_t>(i))
                continue;
            best = std::max(best, dist_to_prefix(c));
        }
        if (dist_to_prefix(order[i]) != best) return false;
    }
    return true;
}

/// Closest point on triangle (a, b, c) to p by projecting onto the plane and
/// falling back to the three edges; distinct from the region-based routine
/// in the library.
inline double point_triangle_distance(const P3& p, const P3& a, const P3& b, const P3& c) {
    auto sub = [](const P3& x, const P3& y) { return P3{x[0] - y[0], x[1] - y[1], x[2] - y[2]}; };
    auto dot = [](const P3& x, const P3& y) { return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]; };
    auto cross = [](const P3& x, const P3& y) {
        return P3{x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
    };
    auto seg = [&](const P3& s0, const P3& s1) {
        const P3 d = sub(s1, s0);
        double t = dot(sub(p, s0), d) / std::max(dot(d, d), 1e-300);
        t = std::clamp(t, 0.0, 1.0);
        const P3 q{s0[0] + t * d[0], s0[1] + t * d[1], s0[2] + t * d[2]};
        return std::sqrt(sq(p, q));
    };
    const P3 n = cross(sub(b, a), sub(c, a));
    const double nn = dot(n, n);
    if (nn > 0.0) {
        const double h = dot(sub(p, a), n) / nn;
        const P3 q{p[0] - h * n[0], p[1] - h * n[1], p[2] - h * n[2]};
        // Inside test via signed sub-triangle areas.
        const double w0 = dot(cross(sub(b, q), sub(c, q)), n);
        const double w1 = dot(cross(sub(c, q), sub(a, q)), n);
        const double w2 = dot(cross(sub(a, q), sub(b, q)), n);
        if (w0 >= 0 && w1 >= 0 && w2 >= 0) return std::sqrt(sq(p, q));
    }
    return std::min({seg(a, b), seg(b, c), seg(c, a)});
}

/// Parameter t in (t_min, t_max) where the segment p + t d crosses triangle
/// (a, b, c), or -1. Plane intersection followed by the same-side test.
inline double segment_triangle_hit(const P3& p, const P3& d, const P3& a, const P3& b, const P3& c, double t_min,
                                   double t_max) {
    auto sub = [](const P3& x, const P3& y) { return P3{x[0] - y[0], x[1] - y[1], x[2] - y[2]}; };
    auto dot = [](const P3& x, const P3& y) { return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]; };
    auto cross = [](const P3& x, const P3& y) {
        return P3{x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
    };
    const P3 n = cross(sub(b, a), sub(c, a));
    const double dn = dot(d, n);
    if (dn == 0.0) return -1.0;
    const double t = dot(sub(a, p), n) / dn;
    if (!(t > t_min && t < t_max)) return -1.0;
    const P3 q{p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2]};
    const double w0 = dot(cross(sub(b, q), sub(c, q)), n);
    const double w1 = dot(cross(sub(c, q), sub(a, q)), n);
    const double w2 = dot(cross(sub(a, q), sub(b, q)), n);
    return w0 >= 0 && w1 >= 0 && w2 >= 0 ? t : -1.0;
}

inline std::vector<P3> random_points(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<P3> out(n);
    for (auto& p : out) p = {u(rng), u(rng), u(rng)};
    return out;
}

}  // namespace oracle
