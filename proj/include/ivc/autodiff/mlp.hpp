#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ivc/autodiff/ops.hpp"
#include "ivc/autodiff/param_set.hpp"

namespace ivc::ad {

enum class Activation { none, relu, tanh };

inline Tensor activate(const Tensor& x, Activation a) {
    switch (a) {
        case Activation::relu: return relu(x);
        case Activation::tanh: return tanh(x);
        case Activation::none: break;
    }
    return x;
}

struct LinearLayer {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out
};

/// Kaiming-uniform bound sqrt(6 / fan_in), zero bias.
inline LinearLayer make_linear(ParamSet& ps, const std::string& name, std::size_t in, std::size_t out,
                               std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> w(in * out);
    for (auto& x : w) x = u(rng);
    return {ps.add(name + ".weight", {in, out}, std::move(w)), ps.add(name + ".bias", {1, out}, std::vector<double>(out, 0.0))};
}

/// Gaussian weights with the given std and zero bias.
inline LinearLayer make_linear_normal(ParamSet& ps, const std::string& name, std::size_t in, std::size_t out,
                                      double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, stddev);
    std::vector<double> w(in * out);
    for (auto& x : w) x = n(rng);
    return {ps.add(name + ".weight", {in, out}, std::move(w)), ps.add(name + ".bias", {1, out}, std::vector<double>(out, 0.0))};
}

/// Stack of affine layers with one hidden activation and a selectable final one.
class Mlp {
public:
    Mlp() = default;

    /// dims = {in, h1, ..., out}. The last layer uses `final_init_std` (normal
    /// init) when positive, Kaiming-uniform otherwise.
    Mlp(ParamSet& ps, const std::string& prefix, const std::vector<std::size_t>& dims, Activation hidden,
        Activation out, std::mt19937_64& rng, double final_init_std = 0.0)
        : hidden_(hidden), out_(out) {
        if (dims.size() < 2) throw DimensionError("mlp " + prefix + ": needs at least input and output dims");
        for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
            const auto name = prefix + ".l" + std::to_string(i);
            const bool last = i + 2 == dims.size();
            layers_.push_back(last && final_init_std > 0.0
                                  ? make_linear_normal(ps, name, dims[i], dims[i + 1], final_init_std, rng)
                                  : make_linear(ps, name, dims[i], dims[i + 1], rng));
        }
    }

    explicit Mlp(std::vector<LinearLayer> layers, Activation hidden, Activation out)
        : layers_(std::move(layers)), hidden_(hidden), out_(out) {}

    Tensor forward(const Tensor& x) const { return mlp_forward(layers_, x, hidden_, out_); }

    static Tensor mlp_forward(const std::vector<LinearLayer>& layers, const Tensor& x, Activation hidden,
                              Activation out) {
        if (layers.empty()) throw DimensionError("mlp_forward: no layers");
        Tensor h = x;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            h = linear(h, layers[i].weight, layers[i].bias);
            h = activate(h, i + 1 == layers.size() ? out : hidden);
        }
        return h;
    }

    const std::vector<LinearLayer>& layers() const { return layers_; }
    std::size_t in_dim() const { return layers_.front().weight.rows(); }
    std::size_t out_dim() const { return layers_.back().weight.cols(); }

private:
    std::vector<LinearLayer> layers_;
    Activation hidden_ = Activation::relu;
    Activation out_ = Activation::none;
};

}  // namespace ivc::ad
