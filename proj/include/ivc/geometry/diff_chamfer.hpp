#pragma once

#include <vector>

#include "ivc/autodiff/ops.hpp"
#include "ivc/geometry/metrics.hpp"

namespace ivc::geo {

namespace detail {

inline std::vector<Vec3> rows_as_points(const ad::Tensor& t, const char* op) {
    if (t.rank() != 2 || t.cols() != 3)
        throw DimensionError(std::string(op) + ": expected N x 3 points, got " + ad::shape_str(t.shape()));
    if (t.rows() == 0) throw ContractError(std::string(op) + ": empty point set");
    std::vector<Vec3> pts(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) pts[i] = Vec3(t(i, 0), t(i, 1), t(i, 2));
    return pts;
}

}  // namespace detail

/// mean_i |a_i - b_nn(i)|^2 as a graph node. Matching is done on values and
/// treated as fixed, so gradients flow only through the selected pairs.
inline ad::Tensor diff_chamfer_single(const ad::Tensor& a, const ad::Tensor& b) {
    const auto pa = detail::rows_as_points(a, "diff_chamfer_single");
    const auto pb = detail::rows_as_points(b, "diff_chamfer_single");
    const auto nn = nearest_neighbors(pa, pb);
    std::vector<std::size_t> match(nn.size());
    double s = 0.0;
    for (std::size_t i = 0; i < nn.size(); ++i) {
        match[i] = nn[i].index;
        s += nn[i].sq_dist;
    }
    const double inv_n = 1.0 / static_cast<double>(pa.size());
    return ad::make_result("diff_chamfer_single", {1, 1}, {s * inv_n}, {a.node(), b.node()},
                           [match = std::move(match), inv_n](ad::Node& self) {
                               ad::Node& na = *self.parents[0];
                               ad::Node& nb = *self.parents[1];
                               const double g = self.grad[0] * 2.0 * inv_n;
                               for (std::size_t i = 0; i < match.size(); ++i) {
                                   const std::size_t j = match[i];
                                   for (int c = 0; c < 3; ++c) {
                                       const double d = g * (na.data[i * 3 + c] - nb.data[j * 3 + c]);
                                       if (na.requires_grad) na.grad_buffer()[i * 3 + c] += d;
                                       if (nb.requires_grad) nb.grad_buffer()[j * 3 + c] -= d;
                                   }
                               }
                           });
}

inline ad::Tensor diff_chamfer_bi(const ad::Tensor& a, const ad::Tensor& b) {
    return ad::add(diff_chamfer_single(a, b), diff_chamfer_single(b, a));
}

/// Elementwise Huber as a graph node.
inline ad::Tensor diff_huber(const ad::Tensor& t, double delta = 0.25) { return ad::huber(t, delta); }

}  // namespace ivc::geo
