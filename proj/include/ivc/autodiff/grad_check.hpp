#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "ivc/autodiff/ops.hpp"
#include "ivc/autodiff/param_set.hpp"

namespace ivc::ad {

/// Compare backward() against central differences at every coordinate of x.
/// Returns max |analytic - numeric| / max(1, |analytic|).
inline double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-5) {
    if (!(h > 0.0)) throw ContractError("grad_check: step must be positive");
    Tensor leaf(x.shape(), x.data(), true);
    const Tensor loss = f(leaf);
    if (loss.size() != 1) throw ContractError("grad_check: function must be scalar-valued");
    if (!std::isfinite(loss.item())) throw NumericError("grad_check: non-finite function value");
    backward(loss);
    const auto analytic = leaf.grad();

    double worst = 0.0;
    std::vector<double> probe = x.data();
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double fp = f(Tensor(x.shape(), probe)).item();
        probe[i] = orig - h;
        const double fm = f(Tensor(x.shape(), probe)).item();
        probe[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        if (!std::isfinite(numeric) || !std::isfinite(analytic[i]))
            throw NumericError("grad_check: non-finite derivative at coordinate " + std::to_string(i));
        worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
    }
    return worst;
}

/// Same check with respect to every parameter of `ps`; `f` rebuilds the
/// graph from the current parameter values on each call.
inline double grad_check_params(const std::function<Tensor()>& f, ParamSet& ps, double h = 1e-5) {
    if (!(h > 0.0)) throw ContractError("grad_check: step must be positive");
    ps.zero_grad();
    const Tensor loss = f();
    if (loss.size() != 1) throw ContractError("grad_check: function must be scalar-valued");
    if (!std::isfinite(loss.item())) throw NumericError("grad_check: non-finite function value");
    backward(loss);

    double worst = 0.0;
    for (auto& e : ps.entries()) {
        const auto analytic = e.value.grad();
        auto& p = e.value.mutable_data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double orig = p[i];
            p[i] = orig + h;
            const double fp = f().item();
            p[i] = orig - h;
            const double fm = f().item();
            p[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            if (!std::isfinite(numeric) || !std::isfinite(analytic[i]))
                throw NumericError("grad_check: non-finite derivative in " + e.name);
            worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
        }
    }
    ps.zero_grad();
    return worst;
}

}  // namespace ivc::ad
