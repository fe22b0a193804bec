#pragma once

#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "ivc/autodiff/mlp.hpp"
#include "ivc/common/network_config.hpp"
#include "ivc/geometry/metrics.hpp"

namespace ivc::completion {

using ad::Tensor;

inline void require_points(const char* op, const Tensor& t) {
    if (t.rank() != 2 || t.cols() != 3) throw DimensionError(std::string(op) + ": expected Nx3 points, got " + ad::shape_str(t.shape()));
    if (t.rows() == 0) throw ContractError(std::string(op) + ": empty point set");
}

/// PointNet-style set encoder: shared per-point MLP, coordinate-wise max-pool,
/// MLP head. Permutation invariant by construction.
class Encoder {
public:
    Encoder() = default;
    Encoder(ad::ParamSet& ps, const NetworkConfig& cfg, std::mt19937_64& rng) {
        std::vector<std::size_t> dims{3};
        dims.insert(dims.end(), cfg.enc_point_dims.begin(), cfg.enc_point_dims.end());
        point_ = ad::Mlp(ps, "enc.point", dims, ad::Activation::relu, ad::Activation::relu, rng);
        head_ = ad::Mlp(ps, "enc.head", {dims.back(), cfg.enc_head_hidden, cfg.code_dim}, ad::Activation::relu,
                        ad::Activation::none, rng);
    }

    Tensor operator()(const Tensor& points) const {
        require_points("encode", points);
        return head_.forward(ad::max_pool_rows(point_.forward(points)));
    }

private:
    ad::Mlp point_, head_;
};

/// Decodes a code into the missing-part seeds (n_seeds x 3).
class Generator {
public:
    Generator() = default;
    Generator(ad::ParamSet& ps, const NetworkConfig& cfg, std::mt19937_64& rng) : n_seeds_(cfg.n_seeds) {
        mlp_ = ad::Mlp(ps, "gen", {cfg.code_dim, cfg.gen_hidden, cfg.n_seeds * 3}, ad::Activation::relu,
                       ad::Activation::none, rng, cfg.gen_final_std);
    }

    Tensor operator()(const Tensor& code) const { return ad::reshape(mlp_.forward(code), {n_seeds_, 3}); }

private:
    ad::Mlp mlp_;
    std::size_t n_seeds_ = 0;
};

/// One-stage point splitting: each parent emits `ratio` children at
/// parent + offset_scale * tanh(MLP(parent, code)).
class Upsampler {
public:
    Upsampler() = default;
    Upsampler(ad::ParamSet& ps, const NetworkConfig& cfg, std::mt19937_64& rng)
        : ratio_(cfg.up_ratio), scale_(cfg.offset_scale) {
        std::vector<std::size_t> dims{3 + cfg.code_dim};
        dims.insert(dims.end(), cfg.up_hidden.begin(), cfg.up_hidden.end());
        dims.push_back(3 * cfg.up_ratio);
        mlp_ = ad::Mlp(ps, "up", dims, ad::Activation::relu, ad::Activation::tanh, rng);
    }

    Tensor operator()(const Tensor& parents, const Tensor& code) const {
        require_points("upsample", parents);
        const std::size_t n = parents.rows();
        const Tensor feat = ad::concat_cols(parents, ad::broadcast_rows(code, n));
        const Tensor offsets = ad::reshape(ad::scale(mlp_.forward(feat), scale_), {n * ratio_, 3});
        std::vector<std::size_t> repeat(n * ratio_);
        for (std::size_t i = 0; i < repeat.size(); ++i) repeat[i] = i / ratio_;
        return ad::add(ad::gather_rows(parents, std::move(repeat)), offsets);
    }

    std::size_t ratio() const { return ratio_; }

private:
    ad::Mlp mlp_;
    std::size_t ratio_ = 4;
    double scale_ = 0.1;
};

struct CoarseCloud {
    Tensor points;                         // X_c
    std::vector<geo::Provenance> tags;     // input or generated, per row
    std::vector<std::size_t> source_rows;  // row in concat(X', Y)
};

/// Row of the lexicographically smallest point; an order-independent FPS seed.
inline std::size_t canonical_seed_index(const std::vector<Vec3>& pts) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto& a = pts[i];
        const auto& b = pts[best];
        if (std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z())) best = i;
    }
    return best;
}

/// Concatenates X' and Y and keeps n_coarse of them by farthest point
/// sampling. The FPS seed defaults to canonical_seed_index so the result does
/// not depend on input order.
inline CoarseCloud assemble_coarse(const Tensor& xp, const Tensor& y, std::size_t n_coarse,
                                   std::optional<std::size_t> seed_index = std::nullopt) {
    require_points("assemble_coarse", xp);
    require_points("assemble_coarse", y);
    const std::size_t total = xp.rows() + y.rows();
    if (total < n_coarse)
        throw ContractError("assemble_coarse: " + std::to_string(total) + " points cannot yield " +
                            std::to_string(n_coarse) + " coarse points");
    const Tensor all = ad::concat_rows(xp, y);
    const auto pts = geo::from_tensor(all).points;
    auto idx = geo::fps_indices(pts, n_coarse, seed_index.value_or(canonical_seed_index(pts)));
    CoarseCloud out;
    out.tags.reserve(idx.size());
    for (auto i : idx) out.tags.push_back(i < xp.rows() ? geo::Provenance::input : geo::Provenance::generated);
    out.source_rows = idx;
    out.points = ad::gather_rows(all, std::move(idx));
    return out;
}

struct CompletionOutput {
    Tensor y;        // generated missing points
    CoarseCloud coarse;
    Tensor x;        // upsampled output
    std::vector<geo::Provenance> x_parent_tags;  // provenance of each output point's parent
    Tensor c_prime;  // E(X')
    Tensor c;        // E(X_c)
    Tensor c_x;      // E(X)
};

/// Encoder + generator (theta_G) and upsampler (theta_U).
class CompletionNet {
public:
    CompletionNet(const NetworkConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), theta_g_("theta_G"), theta_u_("theta_U") {
        cfg_.validate();
        std::mt19937_64 rng(seed);
        encoder_ = Encoder(theta_g_, cfg_, rng);
        generator_ = Generator(theta_g_, cfg_, rng);
        upsampler_ = Upsampler(theta_u_, cfg_, rng);
    }
    CompletionNet(const CompletionNet&) = delete;
    CompletionNet& operator=(const CompletionNet&) = delete;

    const NetworkConfig& config() const { return cfg_; }
    ad::ParamSet& theta_g() { return theta_g_; }
    ad::ParamSet& theta_u() { return theta_u_; }
    const ad::ParamSet& theta_g() const { return theta_g_; }
    const ad::ParamSet& theta_u() const { return theta_u_; }

    Tensor encode(const Tensor& points) const { return encoder_(points); }
    /// G = generator o encoder.
    Tensor generate_missing(const Tensor& xp) const { return generator_(encoder_(xp)); }
    Tensor upsample(const Tensor& coarse, const Tensor& code) const { return upsampler_(coarse, code); }

    CompletionOutput forward(const Tensor& xp) const {
        CompletionOutput out;
        out.c_prime = encoder_(xp);
        out.y = generator_(out.c_prime);
        out.coarse = assemble_coarse(xp, out.y, cfg_.n_coarse);
        out.c = encoder_(out.coarse.points);
        out.x = upsampler_(out.coarse.points, out.c);
        out.x_parent_tags.reserve(out.x.rows());
        for (std::size_t i = 0; i < out.x.rows(); ++i) out.x_parent_tags.push_back(out.coarse.tags[i / cfg_.up_ratio]);
        out.c_x = encoder_(out.x);
        return out;
    }

private:
    NetworkConfig cfg_;
    ad::ParamSet theta_g_, theta_u_;
    Encoder encoder_;
    Generator generator_;
    Upsampler upsampler_;
};

}  // namespace ivc::completion
