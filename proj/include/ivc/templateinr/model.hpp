#pragma once

#include <random>
#include <utility>
#include <vector>

#include "ivc/autodiff/mlp.hpp"
#include "ivc/common/network_config.hpp"
#include "ivc/completion/model.hpp"

namespace ivc::inr {

using ad::Tensor;

/// Residual warp D(x; c) = x + MLP(x, c) into the template space, and the
/// template UDF decoder T(x) = |tanh(MLP(x))|. Both live in theta_T.
class TemplateNet {
public:
    TemplateNet(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg), theta_t_("theta_T") {
        cfg_.validate();
        std::mt19937_64 rng(seed);
        std::vector<std::size_t> wdims{3 + cfg_.code_dim};
        for (std::size_t i = 0; i < cfg_.warp_layers; ++i) wdims.push_back(cfg_.warp_width);
        wdims.push_back(3);
        warp_ = ad::Mlp(theta_t_, "warp", wdims, ad::Activation::relu, ad::Activation::none, rng, cfg_.warp_final_std);
        std::vector<std::size_t> udims{3};
        for (std::size_t i = 0; i + 1 < cfg_.udf_layers; ++i) udims.push_back(cfg_.udf_width);
        udims.push_back(1);
        udf_ = ad::Mlp(theta_t_, "udf", udims, ad::Activation::relu, ad::Activation::tanh, rng);
    }
    TemplateNet(const TemplateNet&) = delete;
    TemplateNet& operator=(const TemplateNet&) = delete;

    const NetworkConfig& config() const { return cfg_; }
    ad::ParamSet& theta_t() { return theta_t_; }
    const ad::ParamSet& theta_t() const { return theta_t_; }

    Tensor warp(const Tensor& x, const Tensor& code) const {
        completion::require_points("warp", x);
        if (code.rows() != 1 || code.cols() != cfg_.code_dim)
            throw DimensionError("warp: code has shape " + ad::shape_str(code.shape()) + ", expected [1x" +
                                 std::to_string(cfg_.code_dim) + "]");
        return ad::add(x, warp_.forward(ad::concat_cols(x, ad::broadcast_rows(code, x.rows()))));
    }

    /// N x 1 distances in [0, 1).
    Tensor udf_decode(const Tensor& xc) const {
        completion::require_points("udf_decode", xc);
        return ad::abs(udf_.forward(xc));
    }

    /// T(D(x; c)).
    Tensor field(const Tensor& x, const Tensor& code) const { return udf_decode(warp(x, code)); }

private:
    NetworkConfig cfg_;
    ad::ParamSet theta_t_;
    ad::Mlp warp_, udf_;
};

}  // namespace ivc::inr
