#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ivc/autodiff/tensor.hpp"

namespace ivc::ad {

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

inline void require_rank2(const char* op, const Tensor& t) {
    if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
}

inline void require_same(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " differ");
}

template <typename Fwd, typename Dfdx>
Tensor unary(const char* op, const Tensor& a, Fwd f, Dfdx dfdx) {
    std::vector<double> out(a.size());
    const auto& x = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
    return make_result(op, a.shape(), std::move(out), {a.node()}, [dfdx](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(p.data[i], self.data[i]);
    });
}

}  // namespace detail

/// (n x k) * (k x m)
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::require_rank2("matmul", a);
    detail::require_rank2("matmul", b);
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions of " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " differ");
    const auto n = a.rows(), k = a.cols(), m = b.cols();
    std::vector<double> out(n * m);
    detail::MapMat(out.data(), n, m).noalias() =
        detail::CMapMat(a.data().data(), n, k) * detail::CMapMat(b.data().data(), k, m);
    return make_result("matmul", {n, m}, std::move(out), {a.node(), b.node()}, [n, k, m](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        detail::CMapMat g(self.grad.data(), n, m);
        if (pa.requires_grad)
            detail::MapMat(pa.grad_buffer().data(), n, k).noalias() +=
                g * detail::CMapMat(pb.data.data(), k, m).transpose();
        if (pb.requires_grad)
            detail::MapMat(pb.grad_buffer().data(), k, m).noalias() +=
                detail::CMapMat(pa.data.data(), n, k).transpose() * g;
    });
}

/// x * W + b with x (n x in), W (in x out), b (1 x out) broadcast over rows.
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    detail::require_rank2("linear", x);
    detail::require_rank2("linear", w);
    if (x.cols() != w.rows() || b.size() != w.cols())
        throw DimensionError("linear: input " + shape_str(x.shape()) + ", weight " + shape_str(w.shape()) +
                             ", bias " + shape_str(b.shape()) + " do not chain");
    const auto n = x.rows(), k = w.rows(), m = w.cols();
    std::vector<double> out(n * m);
    detail::MapMat o(out.data(), n, m);
    o.noalias() = detail::CMapMat(x.data().data(), n, k) * detail::CMapMat(w.data().data(), k, m);
    o.rowwise() += detail::CMapMat(b.data().data(), 1, m).row(0);
    return make_result("linear", {n, m}, std::move(out), {x.node(), w.node(), b.node()}, [n, k, m](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        Node& pb = *self.parents[2];
        detail::CMapMat g(self.grad.data(), n, m);
        if (px.requires_grad)
            detail::MapMat(px.grad_buffer().data(), n, k).noalias() +=
                g * detail::CMapMat(pw.data.data(), k, m).transpose();
        if (pw.requires_grad)
            detail::MapMat(pw.grad_buffer().data(), k, m).noalias() +=
                detail::CMapMat(px.data.data(), n, k).transpose() * g;
        if (pb.requires_grad) detail::MapMat(pb.grad_buffer().data(), 1, m) += g.colwise().sum();
    });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_same("add", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return make_result("add", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
        for (int j = 0; j < 2; ++j) {
            Node& p = *self.parents[j];
            if (!p.requires_grad) continue;
            auto& g = p.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same("sub", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    return make_result("sub", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

/// Elementwise product.
inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require_same("mul", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return make_result("mul", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.data[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.data[i];
        }
    });
}

inline Tensor scale(const Tensor& a, double s) {
    return detail::unary("scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

inline Tensor relu(const Tensor& a) {
    return detail::unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor tanh(const Tensor& a) {
    return detail::unary(
        "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

/// Subgradient 0 at the kink.
inline Tensor abs(const Tensor& a) {
    return detail::unary(
        "abs", a, [](double x) { return std::abs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

inline Tensor square(const Tensor& a) {
    return detail::unary(
        "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

/// Subgradient 0 at x == 0.
inline Tensor sqrt(const Tensor& a) {
    for (double x : a.data())
        if (x < 0.0) throw NumericError("sqrt: negative input " + std::to_string(x));
    return detail::unary(
        "sqrt", a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

/// 1 / x; zero inputs are rejected.
inline Tensor reciprocal(const Tensor& a) {
    for (double x : a.data())
        if (x == 0.0) throw NumericError("reciprocal: zero input");
    return detail::unary(
        "reciprocal", a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

/// Scalar Huber function: t^2/2 inside [-delta, delta], linear outside.
inline double huber_value(double t, double delta) {
    const double a = std::abs(t);
    return a <= delta ? 0.5 * t * t : delta * (a - 0.5 * delta);
}

inline double huber_derivative(double t, double delta) {
    if (t > delta) return delta;
    if (t < -delta) return -delta;
    return t;
}

inline Tensor huber(const Tensor& a, double delta) {
    if (!(delta > 0.0)) throw ContractError("huber: delta must be positive");
    return detail::unary(
        "huber", a, [delta](double x) { return huber_value(x, delta); },
        [delta](double x, double) { return huber_derivative(x, delta); });
}

inline Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double x : a.data()) s += x;
    return make_result("sum", {1, 1}, {s}, {a.node()}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (auto& gi : g) gi += self.grad[0];
    });
}

inline Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw ContractError("mean: empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

/// Sum along columns: (n x m) -> (n x 1).
inline Tensor row_sum(const Tensor& a) {
    detail::require_rank2("row_sum", a);
    const auto n = a.rows(), m = a.cols();
    std::vector<double> out(n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) out[r] += a.data()[r * m + c];
    return make_result("row_sum", {n, 1}, std::move(out), {a.node()}, [n, m](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < m; ++c) g[r * m + c] += self.grad[r];
    });
}

/// Euclidean norm of every row: (n x m) -> (n x 1). Zero rows get gradient 0.
inline Tensor row_norm(const Tensor& a) {
    detail::require_rank2("row_norm", a);
    const auto n = a.rows(), m = a.cols();
    std::vector<double> out(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) s += a.data()[r * m + c] * a.data()[r * m + c];
        out[r] = std::sqrt(s);
    }
    return make_result("row_norm", {n, 1}, std::move(out), {a.node()}, [n, m](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (std::size_t r = 0; r < n; ++r) {
            if (self.data[r] == 0.0) continue;
            const double k = self.grad[r] / self.data[r];
            for (std::size_t c = 0; c < m; ++c) g[r * m + c] += k * p.data[r * m + c];
        }
    });
}

/// Huber of every row's Euclidean norm, fused so the gradient stays finite at
/// zero displacement: d/dv h(|v|) = h'(|v|) v / |v| -> v as |v| -> 0.
inline Tensor row_norm_huber(const Tensor& a, double delta) {
    detail::require_rank2("row_norm_huber", a);
    if (!(delta > 0.0)) throw ContractError("row_norm_huber: delta must be positive");
    const auto n = a.rows(), m = a.cols();
    std::vector<double> norms(n, 0.0), out(n);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) s += a.data()[r * m + c] * a.data()[r * m + c];
        norms[r] = std::sqrt(s);
        out[r] = huber_value(norms[r], delta);
    }
    return make_result("row_norm_huber", {n, 1}, std::move(out), {a.node()},
                       [n, m, delta, norms = std::move(norms)](Node& self) {
                           Node& p = *self.parents[0];
                           if (!p.requires_grad) return;
                           auto& g = p.grad_buffer();
                           for (std::size_t r = 0; r < n; ++r) {
                               const double k =
                                   norms[r] <= delta ? 1.0 : huber_derivative(norms[r], delta) / norms[r];
                               for (std::size_t c = 0; c < m; ++c)
                                   g[r * m + c] += self.grad[r] * k * p.data[r * m + c];
                           }
                       });
}

/// Column-wise max over rows: (n x m) -> (1 x m). Ties go to the lowest row.
inline Tensor max_pool_rows(const Tensor& a) {
    detail::require_rank2("max_pool_rows", a);
    const auto n = a.rows(), m = a.cols();
    if (n == 0) throw DimensionError("max_pool_rows: no rows in " + shape_str(a.shape()));
    std::vector<double> out(a.data().begin(), a.data().begin() + static_cast<std::ptrdiff_t>(m));
    std::vector<std::size_t> arg(m, 0);
    for (std::size_t r = 1; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) {
            const double v = a.data()[r * m + c];
            if (v > out[c]) {
                out[c] = v;
                arg[c] = r;
            }
        }
    return make_result("max_pool_rows", {1, m}, std::move(out), {a.node()}, [m, arg = std::move(arg)](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (std::size_t c = 0; c < m; ++c) g[arg[c] * m + c] += self.grad[c];
    });
}

/// [a | b] with equal row counts.
inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
    detail::require_rank2("concat_cols", a);
    detail::require_rank2("concat_cols", b);
    if (a.rows() != b.rows())
        throw DimensionError("concat_cols: row counts of " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " differ");
    const auto n = a.rows(), ma = a.cols(), mb = b.cols(), m = ma + mb;
    std::vector<double> out(n * m);
    for (std::size_t r = 0; r < n; ++r) {
        std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(r * ma), ma, out.begin() + static_cast<std::ptrdiff_t>(r * m));
        std::copy_n(b.data().begin() + static_cast<std::ptrdiff_t>(r * mb), mb,
                    out.begin() + static_cast<std::ptrdiff_t>(r * m + ma));
    }
    return make_result("concat_cols", {n, m}, std::move(out), {a.node(), b.node()}, [n, ma, mb, m](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < ma; ++c) g[r * ma + c] += self.grad[r * m + c];
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < mb; ++c) g[r * mb + c] += self.grad[r * m + ma + c];
        }
    });
}

/// Stack a over b with equal column counts.
inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
    detail::require_rank2("concat_rows", a);
    detail::require_rank2("concat_rows", b);
    if (a.cols() != b.cols())
        throw DimensionError("concat_rows: column counts of " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " differ");
    std::vector<double> out(a.data());
    out.insert(out.end(), b.data().begin(), b.data().end());
    const auto na = a.size();
    return make_result("concat_rows", {a.rows() + b.rows(), a.cols()}, std::move(out), {a.node(), b.node()},
                       [na](Node& self) {
                           Node& pa = *self.parents[0];
                           Node& pb = *self.parents[1];
                           if (pa.requires_grad) {
                               auto& g = pa.grad_buffer();
                               for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                           }
                           if (pb.requires_grad) {
                               auto& g = pb.grad_buffer();
                               for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[na + i];
                           }
                       });
}

/// Repeat a (1 x m) row n times.
inline Tensor broadcast_rows(const Tensor& a, std::size_t n) {
    detail::require_rank2("broadcast_rows", a);
    if (a.rows() != 1) throw DimensionError("broadcast_rows: expected one row, got " + shape_str(a.shape()));
    const auto m = a.cols();
    std::vector<double> out(n * m);
    for (std::size_t r = 0; r < n; ++r) std::copy(a.data().begin(), a.data().end(), out.begin() + static_cast<std::ptrdiff_t>(r * m));
    return make_result("broadcast_rows", {n, m}, std::move(out), {a.node()}, [n, m](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < m; ++c) g[c] += self.grad[r * m + c];
    });
}

/// Rows of a selected by index (repeats allowed).
inline Tensor gather_rows(const Tensor& a, std::vector<std::size_t> idx) {
    detail::require_rank2("gather_rows", a);
    const auto m = a.cols();
    std::vector<double> out(idx.size() * m);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= a.rows())
            throw DimensionError("gather_rows: index " + std::to_string(idx[i]) + " out of range for " +
                                 shape_str(a.shape()));
        std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(idx[i] * m), m,
                    out.begin() + static_cast<std::ptrdiff_t>(i * m));
    }
    const auto rows = idx.size();
    return make_result("gather_rows", {rows, m}, std::move(out), {a.node()}, [m, idx = std::move(idx)](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t c = 0; c < m; ++c) g[idx[i] * m + c] += self.grad[i * m + c];
    });
}

inline Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size())
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    return make_result("reshape", std::move(shape), a.data(), {a.node()}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

}  // namespace ivc::ad
