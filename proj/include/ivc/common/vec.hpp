#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <vector>

namespace ivc {

using Vec3 = Eigen::Vector3d;

inline double squared_distance(const Vec3& a, const Vec3& b) { return (a - b).squaredNorm(); }

inline bool all_finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace ivc
