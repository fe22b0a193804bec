#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ivc/autodiff/tensor.hpp"
#include "ivc/common/binary_io.hpp"

namespace ivc::ad {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double lr = 5e-4;
    double eps = 1e-8;

    void validate() const {
        if (!(beta1 > 0.0 && beta1 < 1.0)) throw ContractError("adam: beta1 must lie in (0, 1)");
        if (!(beta2 > 0.0 && beta2 < 1.0)) throw ContractError("adam: beta2 must lie in (0, 1)");
        if (!(lr > 0.0)) throw ContractError("adam: lr must be positive");
    }
};

/// Named parameters of one network plus their Adam moments.
class ParamSet {
public:
    struct Entry {
        std::string name;
        Tensor value;
        std::vector<double> m;
        std::vector<double> v;
    };

    explicit ParamSet(std::string name = {}) : name_(std::move(name)) {}

    // Tensors are shared handles; copying a ParamSet would alias parameters.
    ParamSet(const ParamSet&) = delete;
    ParamSet& operator=(const ParamSet&) = delete;
    ParamSet(ParamSet&&) = default;
    ParamSet& operator=(ParamSet&&) = default;

    const std::string& name() const { return name_; }

    Tensor add(std::string param_name, Shape shape, std::vector<double> values) {
        for (const auto& e : entries_)
            if (e.name == param_name) throw ContractError("param set " + name_ + ": duplicate parameter " + param_name);
        Tensor t(std::move(shape), std::move(values), !frozen_);
        const auto n = t.size();
        entries_.push_back({std::move(param_name), t, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
        return t;
    }

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }
    const Tensor& at(const std::string& param_name) const {
        for (const auto& e : entries_)
            if (e.name == param_name) return e.value;
        throw ContractError("param set " + name_ + ": no parameter " + param_name);
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

    bool frozen() const { return frozen_; }
    /// Frozen parameters stop requiring gradients, so graphs built while
    /// frozen never touch their grad slots.
    void set_frozen(bool frozen) {
        frozen_ = frozen;
        for (auto& e : entries_) {
            e.value.set_requires_grad(!frozen);
            if (frozen) e.value.zero_grad();
        }
    }

    void zero_grad() {
        for (auto& e : entries_) e.value.zero_grad();
    }

    /// Raw grad buffers, for undoing a backward pass on this set only.
    std::vector<std::vector<double>> save_grads() const {
        std::vector<std::vector<double>> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e.value.node()->grad);
        return out;
    }
    void restore_grads(std::vector<std::vector<double>> saved) {
        if (saved.size() != entries_.size()) throw ContractError("param set " + name_ + ": grad snapshot size mismatch");
        for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].value.node()->grad = std::move(saved[i]);
    }

    std::uint64_t step_count() const { return step_count_; }
    std::uint64_t skipped_steps() const { return skipped_steps_; }

    /// Bias-corrected Adam; gradients are cleared afterwards. A frozen set is
    /// left untouched and the call is counted in skipped_steps().
    void adam_step(const AdamConfig& cfg) {
        cfg.validate();
        if (frozen_) {
            ++skipped_steps_;
            return;
        }
        ++step_count_;
        const double t = static_cast<double>(step_count_);
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        for (auto& e : entries_) {
            const auto g = e.value.grad();
            auto& p = e.value.mutable_data();
            for (std::size_t i = 0; i < p.size(); ++i) {
                e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g[i];
                e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                const double mhat = e.m[i] / c1;
                const double vhat = e.v[i] / c2;
                p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            }
            e.value.zero_grad();
        }
    }

    /// Exact copy of values, moments and counters (for snapshots).
    void copy_state_from(const ParamSet& other) {
        if (other.entries_.size() != entries_.size())
            throw ContractError("param set " + name_ + ": layout differs from " + other.name_);
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            auto& e = entries_[i];
            const auto& o = other.entries_[i];
            if (e.name != o.name || e.value.shape() != o.value.shape())
                throw ContractError("param set " + name_ + ": parameter " + e.name + " layout differs");
            e.value.mutable_data() = o.value.data();
            e.m = o.m;
            e.v = o.v;
        }
        step_count_ = other.step_count_;
    }

    void write(std::ostream& os) const {
        bin::put_string(os, name_);
        bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(entries_.size()));
        for (const auto& e : entries_) {
            bin::put_string(os, e.name);
            bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(e.value.rank()));
            for (auto d : e.value.shape()) bin::put<std::uint64_t>(os, d);
            for (double x : e.value.data()) bin::put<double>(os, x);
            for (double x : e.m) bin::put<double>(os, x);
            for (double x : e.v) bin::put<double>(os, x);
            bin::put<std::uint64_t>(os, step_count_);
        }
    }

    /// Reads into the existing parameters in place so network handles stay valid.
    void read(std::istream& is, const std::string& path) {
        const auto name = bin::get_string(is, path);
        if (name != name_) throw IoError(path + ": expected param set " + name_ + ", found " + name);
        const auto count = bin::get<std::uint32_t>(is, path);
        if (count != entries_.size())
            throw IoError(path + ": param set " + name_ + " has " + std::to_string(count) + " parameters, expected " +
                          std::to_string(entries_.size()));
        for (auto& e : entries_) {
            const auto pname = bin::get_string(is, path);
            if (pname != e.name) throw IoError(path + ": expected parameter " + e.name + ", found " + pname);
            const auto rank = bin::get<std::uint32_t>(is, path);
            Shape shape(rank);
            for (auto& d : shape) d = bin::get<std::uint64_t>(is, path);
            if (shape != e.value.shape())
                throw IoError(path + ": parameter " + e.name + " has shape " + shape_str(shape) + ", expected " +
                              shape_str(e.value.shape()));
            auto& data = e.value.mutable_data();
            for (auto& x : data) x = bin::get<double>(is, path);
            for (auto& x : e.m) x = bin::get<double>(is, path);
            for (auto& x : e.v) x = bin::get<double>(is, path);
            step_count_ = bin::get<std::uint64_t>(is, path);
            e.value.zero_grad();
        }
    }

private:
    std::string name_;
    std::vector<Entry> entries_;
    bool frozen_ = false;
    std::uint64_t step_count_ = 0;
    std::uint64_t skipped_steps_ = 0;
};

/// Stops parameters from recording gradients for the lifetime of the guard,
/// leaving frozen flags and accumulated grads alone. Used for queries that
/// only need gradients with respect to inputs.
class GradPause {
public:
    explicit GradPause(std::vector<ParamSet*> sets) : sets_(std::move(sets)) {
        for (auto* s : sets_)
            for (auto& e : s->entries()) {
                saved_.push_back(e.value.requires_grad());
                e.value.set_requires_grad(false);
            }
    }
    ~GradPause() {
        std::size_t k = 0;
        for (auto* s : sets_)
            for (auto& e : s->entries()) e.value.set_requires_grad(saved_[k++]);
    }
    GradPause(const GradPause&) = delete;
    GradPause& operator=(const GradPause&) = delete;

private:
    std::vector<ParamSet*> sets_;
    std::vector<bool> saved_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Checkpoint file: "IVCK", u32 version, u32 set count, then each set.
inline void save_checkpoint(const std::string& path, const std::vector<const ParamSet*>& sets) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(path + ": cannot open for writing");
    bin::put_magic(os, "IVCK");
    bin::put<std::uint32_t>(os, kCheckpointVersion);
    bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(sets.size()));
    for (const auto* s : sets) s->write(os);
    if (!os) throw IoError(path + ": write failed");
}

inline void load_checkpoint(const std::string& path, const std::vector<ParamSet*>& sets) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(path + ": cannot open checkpoint");
    bin::expect_magic(is, "IVCK", path);
    const auto version = bin::get<std::uint32_t>(is, path);
    if (version != kCheckpointVersion) throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
    const auto count = bin::get<std::uint32_t>(is, path);
    if (count != sets.size())
        throw IoError(path + ": holds " + std::to_string(count) + " param sets, expected " + std::to_string(sets.size()));
    for (auto* s : sets) s->read(is, path);
}

}  // namespace ivc::ad
