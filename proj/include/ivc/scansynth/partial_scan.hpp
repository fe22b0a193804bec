#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "ivc/geometry/point_set.hpp"
#include "ivc/scansynth/bvh.hpp"

namespace ivc::scan {

/// Fibonacci-lattice directions (poles included) at `radius`, rotated by a
/// uniformly random rotation drawn from `seed`.
inline std::vector<Vec3> sample_cameras(std::size_t n, double radius, std::uint64_t seed) {
    if (n < 1) throw ContractError("sample_cameras: n must be at least 1");
    std::vector<Vec3> dirs(n);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double z = n == 1 ? 1.0 : 1.0 - 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i);
        dirs[i] = Vec3(r * std::cos(phi), r * std::sin(phi), z);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    const Eigen::Matrix3d rot = q.toRotationMatrix();
    for (auto& d : dirs) d = radius * (rot * d);
    return dirs;
}

struct PartialScan {
    geo::PointSet points;
    std::vector<std::uint32_t> visible_triangles;  // triangles that produced a kept sample, sorted
    std::size_t draws = 0;
    double visible_fraction() const {
        return draws == 0 ? 0.0 : static_cast<double>(points.size()) / static_cast<double>(draws);
    }
};

/// Area-weighted surface sampler.
class SurfaceSampler {
public:
    explicit SurfaceSampler(const TriangleMesh& mesh) : mesh_(&mesh), cdf_(mesh.triangles.size()) {
        double acc = 0.0;
        for (std::size_t t = 0; t < cdf_.size(); ++t) cdf_[t] = acc += mesh.area(t);
        if (!(acc > 0.0)) throw ContractError("SurfaceSampler: zero surface area");
    }

    /// Returns (point, triangle index).
    std::pair<Vec3, std::uint32_t> sample(std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double x = u(rng) * cdf_.back();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
        if (it == cdf_.end()) --it;
        const auto t = static_cast<std::uint32_t>(it - cdf_.begin());
        const double s = std::sqrt(u(rng)), r = u(rng);
        const Vec3 p = (1.0 - s) * mesh_->corner(t, 0) + s * (1.0 - r) * mesh_->corner(t, 1) + s * r * mesh_->corner(t, 2);
        return {p, t};
    }

    std::vector<Vec3> sample_points(std::size_t n, std::mt19937_64& rng) const {
        std::vector<Vec3> out(n);
        for (auto& p : out) p = sample(rng).first;
        return out;
    }

private:
    const TriangleMesh* mesh_;
    std::vector<double> cdf_;
};

/// Offset along the camera ray before the occlusion test, so the sample's
/// own triangle is never reported as a blocker.
inline constexpr double kVisibilityOffset = 1e-7;

/// A surface point is visible iff its triangle faces the camera and the
/// segment to the camera crosses no triangle.
inline bool point_visible(const Bvh& bvh, const TriangleMesh& mesh, std::uint32_t tri, const Vec3& p, const Vec3& cam) {
    Vec3 dir = cam - p;
    const double len = dir.norm();
    dir /= len;
    if (mesh.normal(tri).dot(dir) <= 0.0) return false;
    return !bvh.segment_blocked(p, dir, kVisibilityOffset, len);
}

/// Samples the surface uniformly and keeps samples visible from `cam` until
/// `n_points` are collected or `n_points / min_visible_fraction` draws are spent.
inline PartialScan render_partial(const TriangleMesh& mesh, const Vec3& cam, std::size_t n_points, std::uint64_t seed,
                                  double min_visible_fraction = 0.02) {
    if (n_points == 0) throw ContractError("render_partial: n_points must be positive");
    const Bvh bvh(mesh);
    const SurfaceSampler sampler(mesh);
    std::mt19937_64 rng(seed);
    PartialScan scan;
    std::set<std::uint32_t> visible;
    const auto budget = static_cast<std::size_t>(std::ceil(static_cast<double>(n_points) / min_visible_fraction));
    while (scan.points.size() < n_points && scan.draws < budget) {
        const auto [p, t] = sampler.sample(rng);
        ++scan.draws;
        if (!point_visible(bvh, mesh, t, p, cam)) continue;
        scan.points.points.push_back(p);
        visible.insert(t);
    }
    if (scan.points.empty()) throw ContractError("render_partial: mesh is not visible from the camera");
    scan.points.tags.assign(scan.points.size(), geo::Provenance::input);
    scan.visible_triangles.assign(visible.begin(), visible.end());
    return scan;
}

struct UdfSample {
    Vec3 position;
    double distance;
};

struct UdfSamplingConfig {
    std::size_t n_near = 4000;
    std::size_t n_uniform = 1000;
    double sigma_wide = 0.05;
    double sigma_narrow = 0.005;
};

/// Near-surface samples (half at each noise level) around the partial points
/// plus uniform samples in the unit ball. Distances are exact point-to-triangle
/// distances to the partial surface held by `partial_surface`.
inline std::vector<UdfSample> sample_udf(const geo::PointSet& partial, const Bvh& partial_surface,
                                         const UdfSamplingConfig& cfg, std::uint64_t seed) {
    if (partial.empty()) throw ContractError("sample_udf: empty partial point set");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, partial.size() - 1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<UdfSample> out;
    out.reserve(cfg.n_near + cfg.n_uniform);
    for (std::size_t i = 0; i < cfg.n_near; ++i) {
        const double sigma = i < cfg.n_near / 2 ? cfg.sigma_wide : cfg.sigma_narrow;
        const Vec3 base = partial[pick(rng)];
        const Vec3 x = base + sigma * Vec3(g(rng), g(rng), g(rng));
        out.push_back({x, 0.0});
    }
    for (std::size_t i = 0; i < cfg.n_uniform; ++i) {
        Vec3 x;
        do x = Vec3(u(rng), u(rng), u(rng));
        while (x.squaredNorm() > 1.0);
        out.push_back({x, 0.0});
    }
    for (auto& s : out) s.distance = partial_surface.closest(s.position).distance;
    return out;
}

}  // namespace ivc::scan
