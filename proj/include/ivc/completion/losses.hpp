#pragma once

#include <functional>
#include <optional>

#include "ivc/completion/model.hpp"
#include "ivc/geometry/diff_chamfer.hpp"

namespace ivc::completion {

using PointFn = std::function<Tensor(const Tensor&)>;
/// Warp into the template space, D(x; code).
using WarpFn = std::function<Tensor(const Tensor& points, const Tensor& code)>;

/// Chamfer(G(G(X')), X'): applying the completion function to its own output
/// must give back the input.
inline Tensor loss_invo(const PointFn& g, const Tensor& xp) {
    require_points("loss_invo", xp);
    return geo::diff_chamfer_bi(g(g(xp)), xp);
}

inline Tensor loss_invo(const CompletionNet& net, const Tensor& xp) {
    return loss_invo([&net](const Tensor& p) { return net.generate_missing(p); }, xp);
}

/// Chamfer(D(points; code), P). The same construction serves L_G (X_c, c)
/// and L_U (X, c_X).
inline Tensor loss_template(const Tensor& points, const Tensor& code, const Tensor& templ, const WarpFn& warp) {
    if (!templ.defined() || templ.rows() == 0) throw ContractError("loss_template: empty template cloud");
    require_points("loss_template", points);
    return geo::diff_chamfer_bi(warp(points, code), templ);
}

inline Tensor loss_template_g(const Tensor& x_c, const Tensor& c, const Tensor& templ, const WarpFn& warp) {
    return loss_template(x_c, c, templ, warp);
}

inline Tensor loss_template_u(const Tensor& x, const Tensor& c_x, const Tensor& templ, const WarpFn& warp) {
    return loss_template(x, c_x, templ, warp);
}

/// Single-sided Chamfer from the coarse cloud to the upsampled output.
inline Tensor loss_part(const Tensor& x_c, const Tensor& x) { return geo::diff_chamfer_single(x_c, x); }

struct CompletionWeights {
    double l1 = 1.0;  // involution
    double l2 = 1.0;  // partial matching
};

struct CompletionLossTerms {
    Tensor l_g, l_u, l_invo, l_part;
    Tensor theta_g;  // L_G + l1 * L_invo
    Tensor theta_u;  // L_U + l2 * L_part
};

/// What the template-consistency terms compare against: the template cloud
/// through the warp, a complete ground-truth cloud (supervised variant), or
/// nothing (no template yet, or completion-only ablation).
struct CompletionTarget {
    enum class Kind { none, template_cloud, ground_truth } kind = Kind::none;
    Tensor cloud;
    WarpFn warp;
};

inline Tensor combine(const Tensor& a, double w, const Tensor& b) {
    if (w == 0.0) return a;
    return ad::add(a, ad::scale(b, w));
}

/// Losses of one partial input. Absent template terms are reported as 0.
inline CompletionLossTerms completion_losses(const CompletionNet& net, const CompletionOutput& out, const Tensor& xp,
                                             const CompletionTarget& target, const CompletionWeights& w) {
    CompletionLossTerms t;
    require_points("completion_losses", xp);
    // G(X') is already out.y; only the second application is new.
    t.l_invo = geo::diff_chamfer_bi(net.generate_missing(out.y), xp);
    t.l_part = loss_part(out.coarse.points, out.x);
    switch (target.kind) {
        case CompletionTarget::Kind::template_cloud:
            t.l_g = loss_template_g(out.coarse.points, out.c, target.cloud, target.warp);
            t.l_u = loss_template_u(out.x, out.c_x, target.cloud, target.warp);
            break;
        case CompletionTarget::Kind::ground_truth:
            if (!target.cloud.defined() || target.cloud.rows() == 0)
                throw ContractError("completion_losses: supervised target is empty");
            t.l_g = geo::diff_chamfer_bi(out.coarse.points, target.cloud);
            t.l_u = geo::diff_chamfer_bi(out.x, target.cloud);
            break;
        case CompletionTarget::Kind::none:
            t.l_g = Tensor::scalar(0.0);
            t.l_u = Tensor::scalar(0.0);
            break;
    }
    t.theta_g = combine(t.l_g, w.l1, t.l_invo);
    t.theta_u = combine(t.l_u, w.l2, t.l_part);
    return t;
}

}  // namespace ivc::completion
