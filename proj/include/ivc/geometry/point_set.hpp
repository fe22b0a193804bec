#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ivc/autodiff/tensor.hpp"
#include "ivc/common/error.hpp"
#include "ivc/common/vec.hpp"

namespace ivc::geo {

enum class Provenance : std::uint8_t { input, generated, upsampled };

/// Ordered 3D points in the unit-normalized frame, optionally tagged with
/// where each point came from.
struct PointSet {
    std::vector<Vec3> points;
    std::vector<Provenance> tags;  // empty or one per point

    PointSet() = default;
    explicit PointSet(std::vector<Vec3> pts) : points(std::move(pts)) {}
    PointSet(std::vector<Vec3> pts, Provenance tag) : points(std::move(pts)), tags(points.size(), tag) {}

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool tagged() const { return !tags.empty(); }
    const Vec3& operator[](std::size_t i) const { return points[i]; }

    void validate(const char* what) const {
        if (points.empty()) throw ContractError(std::string(what) + ": point set is empty");
        for (const auto& p : points)
            if (!all_finite(p)) throw NumericError(std::string(what) + ": non-finite coordinate");
        if (!tags.empty() && tags.size() != points.size())
            throw ContractError(std::string(what) + ": provenance tags do not cover all points");
    }

    std::size_t count(Provenance tag) const {
        std::size_t n = 0;
        for (auto t : tags) n += t == tag;
        return n;
    }

    PointSet select(const std::vector<std::size_t>& idx) const {
        PointSet out;
        out.points.reserve(idx.size());
        for (auto i : idx) out.points.push_back(points[i]);
        if (tagged()) {
            out.tags.reserve(idx.size());
            for (auto i : idx) out.tags.push_back(tags[i]);
        }
        return out;
    }

    /// Concatenation; tags are kept only when both sides carry them.
    static PointSet concat(const PointSet& a, const PointSet& b) {
        PointSet out;
        out.points = a.points;
        out.points.insert(out.points.end(), b.points.begin(), b.points.end());
        if (a.tagged() && b.tagged()) {
            out.tags = a.tags;
            out.tags.insert(out.tags.end(), b.tags.begin(), b.tags.end());
        }
        return out;
    }
};

/// N x 3 tensor view of a point set (copies).
inline ad::Tensor to_tensor(const PointSet& ps, bool requires_grad = false) {
    std::vector<double> v;
    v.reserve(ps.size() * 3);
    for (const auto& p : ps.points) v.insert(v.end(), {p.x(), p.y(), p.z()});
    return ad::Tensor({ps.size(), 3}, std::move(v), requires_grad);
}

inline PointSet from_tensor(const ad::Tensor& t) {
    if (t.rank() != 2 || t.cols() != 3)
        throw DimensionError("from_tensor: expected N x 3, got " + ad::shape_str(t.shape()));
    PointSet ps;
    ps.points.reserve(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) ps.points.emplace_back(t(i, 0), t(i, 1), t(i, 2));
    return ps;
}

}  // namespace ivc::geo
