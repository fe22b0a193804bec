#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "ivc/autodiff/param_set.hpp"
#include "ivc/geometry/metrics.hpp"
#include "ivc/templateinr/model.hpp"

namespace ivc::inr {

/// Distance field over N x 3 points returning N x 1 values, built from graph ops.
using FieldFn = std::function<Tensor(const Tensor&)>;

/// Field values and input gradients for every point, evaluated in chunks.
/// Parameters referenced by the field must not record gradients (see GradPause).
inline void field_with_gradient(const FieldFn& field, const std::vector<Vec3>& pts, std::vector<double>& values,
                                std::vector<Vec3>& grads, std::size_t chunk = 1024) {
    values.assign(pts.size(), 0.0);
    grads.assign(pts.size(), Vec3::Zero());
    for (std::size_t begin = 0; begin < pts.size(); begin += chunk) {
        const std::size_t n = std::min(chunk, pts.size() - begin);
        std::vector<double> flat(n * 3);
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) flat[i * 3 + static_cast<std::size_t>(c)] = pts[begin + i][c];
        Tensor x({n, 3}, std::move(flat), true);
        const Tensor d = field(x);
        if (d.size() != n) throw DimensionError("field_with_gradient: field returned " + ad::shape_str(d.shape()));
        ad::backward(ad::sum(d));
        const auto g = x.grad();
        for (std::size_t i = 0; i < n; ++i) {
            values[begin + i] = d.data()[i];
            grads[begin + i] = Vec3(g[i * 3], g[i * 3 + 1], g[i * 3 + 2]);
        }
    }
}

inline std::vector<double> field_values(const FieldFn& field, const std::vector<Vec3>& pts, std::size_t chunk = 4096) {
    std::vector<double> out(pts.size());
    for (std::size_t begin = 0; begin < pts.size(); begin += chunk) {
        const std::size_t n = std::min(chunk, pts.size() - begin);
        std::vector<double> flat(n * 3);
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) flat[i * 3 + static_cast<std::size_t>(c)] = pts[begin + i][c];
        const Tensor d = field(Tensor({n, 3}, std::move(flat)));
        std::copy(d.data().begin(), d.data().end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
    }
    return out;
}

struct ProjectionConfig {
    std::size_t n_candidates = 4096;
    std::size_t iterations = 20;
    double level_tol = 5e-3;
    double radius = 1.0;  // candidates are uniform in the ball of this radius
};

struct ProjectionResult {
    geo::PointSet points;         // survivors, FPS-reduced when more than requested
    std::vector<double> values;   // field value at each returned point
    std::size_t survivors = 0;
    bool incomplete = false;      // fewer survivors than requested
    double mean_final_value = 0;  // over all candidates, for diagnostics
};

/// Moves candidates onto the zero level set with x <- x - d grad d / |grad d|^2,
/// keeps those with d < level_tol that stayed inside the candidate ball, and
/// reduces them to n_points by FPS. The field is only trained inside that
/// ball; a zero found far outside it is extrapolation, not surface.
inline ProjectionResult project_to_level_set(const FieldFn& field, std::size_t n_points, const ProjectionConfig& cfg,
                                             std::uint64_t seed) {
    if (n_points == 0) throw ContractError("project_to_level_set: n_points must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> pts(cfg.n_candidates);
    for (auto& p : pts) {
        do p = Vec3(u(rng), u(rng), u(rng));
        while (p.squaredNorm() > 1.0);
        p *= cfg.radius;
    }
    std::vector<double> d;
    std::vector<Vec3> g;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        field_with_gradient(field, pts, d, g);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double gn = g[i].squaredNorm();
            if (gn > 1e-12 && std::isfinite(gn)) pts[i] -= (d[i] / gn) * g[i];
        }
    }
    d = field_values(field, pts);
    ProjectionResult out;
    std::vector<Vec3> kept;
    std::vector<double> kept_d;
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        total += d[i];
        if (all_finite(pts[i]) && d[i] < cfg.level_tol && pts[i].norm() <= cfg.radius + cfg.level_tol) {
            kept.push_back(pts[i]);
            kept_d.push_back(d[i]);
        }
    }
    out.mean_final_value = pts.empty() ? 0.0 : total / static_cast<double>(pts.size());
    out.survivors = kept.size();
    if (kept.size() <= n_points) {
        out.incomplete = kept.size() < n_points;
        out.points = geo::PointSet(std::move(kept), geo::Provenance::generated);
        out.values = std::move(kept_d);
        return out;
    }
    const auto idx = geo::fps_indices(kept, n_points, 0);
    std::vector<Vec3> sel;
    sel.reserve(idx.size());
    for (auto i : idx) {
        sel.push_back(kept[i]);
        out.values.push_back(kept_d[i]);
    }
    out.points = geo::PointSet(std::move(sel), geo::Provenance::generated);
    return out;
}

/// Template cloud P: zero level set of T in the template space.
inline ProjectionResult extract_template(TemplateNet& net, std::size_t n_points, const ProjectionConfig& cfg,
                                         std::uint64_t seed) {
    ad::GradPause pause({&net.theta_t()});
    return project_to_level_set([&net](const Tensor& x) { return net.udf_decode(x); }, n_points, cfg, seed);
}

}  // namespace ivc::inr
