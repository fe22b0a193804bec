#pragma once

#include <algorithm>
#include <random>
#include <utility>
#include <vector>

#include "ivc/templateinr/model.hpp"

namespace ivc::inr {

enum class Reduction { mean, sum };

inline Tensor reduce(const Tensor& t, Reduction r) { return r == Reduction::mean ? ad::mean(t) : ad::sum(t); }

/// Mean |pred - min(d, clamp)| over a batch of UDF samples.
inline Tensor loss_t(const Tensor& pred, const std::vector<double>& targets, double clamp_dist) {
    if (pred.size() != targets.size())
        throw ContractError("loss_T: " + std::to_string(pred.size()) + " predictions for " +
                            std::to_string(targets.size()) + " targets");
    if (targets.empty()) throw ContractError("loss_T: empty batch");
    std::vector<double> clamped(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!(targets[i] >= 0.0)) throw ContractError("loss_T: negative or non-finite target distance");
        clamped[i] = std::min(targets[i], clamp_dist);
    }
    return ad::mean(ad::abs(ad::sub(pred, Tensor(pred.shape(), std::move(clamped)))));
}

/// L_T through the full field T(D(x; code)).
inline Tensor loss_t(const TemplateNet& net, const Tensor& positions, const std::vector<double>& targets,
                     const Tensor& code, double clamp_dist) {
    return loss_t(net.field(positions, code), targets, clamp_dist);
}

/// Huber of each point's warp displacement ||D(x; c) - x||.
inline Tensor loss_pw(const Tensor& warped, const Tensor& x, double delta, Reduction r) {
    return reduce(ad::row_norm_huber(ad::sub(warped, x), delta), r);
}

inline Tensor loss_pw(const TemplateNet& net, const Tensor& x, const Tensor& code, double delta, Reduction r) {
    return loss_pw(net.warp(x, code), x, delta, r);
}

using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

/// `count` ordered pairs (i, j), i != j, drawn uniformly with replacement.
inline PairList sample_pairs(std::size_t n, std::size_t count, std::mt19937_64& rng) {
    if (n < 2) throw ContractError("sample_pairs: need at least two points");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_int_distribution<std::size_t> other(0, n - 2);
    PairList out(count);
    for (auto& [i, j] : out) {
        i = pick(rng);
        j = other(rng);
        if (j >= i) ++j;
    }
    return out;
}

/// max(||dx_i - dx_j|| / ||x_i - x_j||, 0) over the given pairs, where dx is
/// the warp displacement. Coincident pairs are skipped.
inline Tensor loss_pp(const Tensor& warped, const Tensor& x, const PairList& pairs, Reduction r) {
    if (warped.shape() != x.shape()) throw DimensionError("loss_pp: warped and input shapes differ");
    std::vector<std::size_t> ia, ib;
    for (const auto& [i, j] : pairs) {
        double s = 0.0;
        for (std::size_t c = 0; c < 3; ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
        if (s == 0.0) continue;
        ia.push_back(i);
        ib.push_back(j);
    }
    if (ia.empty()) return Tensor::scalar(0.0);
    const Tensor disp = ad::sub(warped, x);
    const Tensor diff = ad::sub(ad::gather_rows(disp, ia), ad::gather_rows(disp, ib));
    const Tensor len = ad::row_norm(ad::sub(ad::gather_rows(x, ia), ad::gather_rows(x, ib)));
    const Tensor ratio = ad::mul(ad::row_norm(diff), ad::reciprocal(len));
    // The ratio is already non-negative, so the max with 0 changes nothing.
    return reduce(ratio, r);
}

inline Tensor loss_pp(const TemplateNet& net, const Tensor& x, const Tensor& code, const PairList& pairs, Reduction r) {
    return loss_pp(net.warp(x, code), x, pairs, r);
}

struct InrWeights {
    double l3 = 0.0005;  // point-wise warp regularizer
    double l4 = 0.0001;  // point-pair warp regularizer
    double clamp_dist = 0.1;
    double huber_delta = 0.25;
    std::size_t pp_pairs = 256;
    Reduction reduction = Reduction::mean;
};

/// L_T + l3 L_pw + l4 L_pp.
inline Tensor inr_loss(const Tensor& l_t, const Tensor& l_pw, const Tensor& l_pp, const InrWeights& w) {
    return ad::add(ad::add(l_t, ad::scale(l_pw, w.l3)), ad::scale(l_pp, w.l4));
}

}  // namespace ivc::inr
