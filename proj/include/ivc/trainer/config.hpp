#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "ivc/common/network_config.hpp"
#include "ivc/completion/losses.hpp"
#include "ivc/templateinr/losses.hpp"
#include "ivc/templateinr/projection.hpp"

namespace ivc::train {

using json = nlohmann::json;

enum class Mode { full, inr_only, completion_only, no_invo, supervised };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::full: return "full";
        case Mode::inr_only: return "inr_only";
        case Mode::completion_only: return "completion_only";
        case Mode::no_invo: return "no_invo";
        case Mode::supervised: return "supervised";
    }
    return "full";
}

inline Mode parse_mode(const std::string& s) {
    if (s == "full") return Mode::full;
    if (s == "inr_only") return Mode::inr_only;
    if (s == "completion_only") return Mode::completion_only;
    if (s == "no_invo") return Mode::no_invo;
    if (s == "supervised") return Mode::supervised;
    throw ConfigError("unknown mode '" + s + "' (expected full, inr_only, completion_only, no_invo or supervised)");
}

struct TrainConfig {
    std::string dataset;  // directory holding manifest.json
    Mode mode = Mode::full;
    bool supervised_no_invo = false;  // supervised targets with l1 forced to 0
    std::uint64_t seed = 0;
    std::size_t batch_size = 24;
    double lr = 5e-4;
    double lr_decay = 0.5;
    double lr_decay_epochs = 500;
    std::size_t epochs = 2500;
    std::size_t max_iterations = 50000;  // takes precedence over epochs when non-zero
    completion::CompletionWeights completion_weights;  // l1, l2
    inr::InrWeights inr_weights;                       // l3, l4, clamp, Huber delta, pairs
    std::size_t warmup_iterations = 500;
    std::size_t template_refresh = 250;
    std::size_t template_points = 2048;
    inr::ProjectionConfig template_extraction;  // 4096 candidates, 20 iterations, 5e-3
    std::size_t n_input_points = 2048;          // surface points drawn per observation per step
    std::size_t n_udf_samples = 5000;           // UDF samples drawn per observation per step
    std::size_t checkpoint_every = 1000;        // 0 disables periodic checkpoints
    NetworkConfig network;

    /// Reduced sizes for CPU runs: 32 seeds, 128 coarse, 512 output points,
    /// 512 input points, 1024 UDF samples, 5,000 iterations.
    static TrainConfig desk() {
        TrainConfig c;
        c.network = NetworkConfig::desk();
        c.template_points = 512;
        c.n_input_points = 512;
        c.n_udf_samples = 1024;
        c.max_iterations = 5000;
        return c;
    }

    double l1_effective() const {
        return mode == Mode::no_invo || (mode == Mode::supervised && supervised_no_invo) ? 0.0 : completion_weights.l1;
    }

    void validate() const {
        network.validate();
        if (batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
        if (mode == Mode::full && batch_size < 2) throw ConfigError("train: batch_size must be at least 2 in full mode");
        if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
        if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train: lr_decay must lie in (0, 1]");
        if (!(lr_decay_epochs > 0.0)) throw ConfigError("train: lr_decay_epochs must be positive");
        if (max_iterations == 0 && epochs == 0) throw ConfigError("train: need max_iterations or epochs");
        const auto& w = inr_weights;
        if (completion_weights.l1 < 0 || completion_weights.l2 < 0 || w.l3 < 0 || w.l4 < 0)
            throw ConfigError("train: loss weights must be non-negative");
        if (!(w.clamp_dist > 0.0)) throw ConfigError("train: clamp_dist must be positive");
        if (!(w.huber_delta > 0.0)) throw ConfigError("train: huber_delta must be positive");
        if (template_refresh == 0) throw ConfigError("train: template_refresh must be positive");
        if (template_points == 0 || template_extraction.n_candidates == 0)
            throw ConfigError("train: template sizes must be positive");
        if (n_input_points == 0 || n_udf_samples == 0) throw ConfigError("train: per-step point counts must be positive");
        if (n_input_points + network.n_seeds < network.n_coarse)
            throw ConfigError("train: n_input_points + n_seeds must be at least n_coarse");
    }
};

inline json to_json(const NetworkConfig& n) {
    return {{"code_dim", n.code_dim},         {"enc_point_dims", n.enc_point_dims}, {"enc_head_hidden", n.enc_head_hidden},
            {"gen_hidden", n.gen_hidden},     {"gen_final_std", n.gen_final_std},   {"n_seeds", n.n_seeds},
            {"n_coarse", n.n_coarse},         {"up_ratio", n.up_ratio},             {"up_hidden", n.up_hidden},
            {"offset_scale", n.offset_scale}, {"warp_width", n.warp_width},         {"warp_layers", n.warp_layers},
            {"warp_final_std", n.warp_final_std}, {"udf_width", n.udf_width},       {"udf_layers", n.udf_layers}};
}

inline json to_json(const TrainConfig& c) {
    const auto& w = c.inr_weights;
    const auto& t = c.template_extraction;
    return {{"dataset", c.dataset},
            {"mode", to_string(c.mode)},
            {"supervised_no_invo", c.supervised_no_invo},
            {"seed", c.seed},
            {"batch_size", c.batch_size},
            {"lr", c.lr},
            {"lr_decay", c.lr_decay},
            {"lr_decay_epochs", c.lr_decay_epochs},
            {"epochs", c.epochs},
            {"max_iterations", c.max_iterations},
            {"l1", c.completion_weights.l1},
            {"l2", c.completion_weights.l2},
            {"l3", w.l3},
            {"l4", w.l4},
            {"clamp_dist", w.clamp_dist},
            {"huber_delta", w.huber_delta},
            {"pp_pairs", w.pp_pairs},
            {"reduction", w.reduction == inr::Reduction::mean ? "mean" : "sum"},
            {"warmup_iterations", c.warmup_iterations},
            {"template_refresh", c.template_refresh},
            {"template_points", c.template_points},
            {"template_candidates", t.n_candidates},
            {"template_iterations", t.iterations},
            {"template_level_tol", t.level_tol},
            {"n_input_points", c.n_input_points},
            {"n_udf_samples", c.n_udf_samples},
            {"checkpoint_every", c.checkpoint_every},
            {"network", to_json(c.network)}};
}

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
    }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `n`; unknown keys are rejected.
inline void apply_json(const json& j, NetworkConfig& n) {
    const std::string where = "network config";
    detail::reject_unknown(j, {"code_dim", "enc_point_dims", "enc_head_hidden", "gen_hidden", "gen_final_std", "n_seeds",
                               "n_coarse", "up_ratio", "up_hidden", "offset_scale", "warp_width", "warp_layers",
                               "warp_final_std", "udf_width", "udf_layers"},
                           where);
    detail::read_opt(j, "code_dim", n.code_dim, where);
    detail::read_opt(j, "enc_point_dims", n.enc_point_dims, where);
    detail::read_opt(j, "enc_head_hidden", n.enc_head_hidden, where);
    detail::read_opt(j, "gen_hidden", n.gen_hidden, where);
    detail::read_opt(j, "gen_final_std", n.gen_final_std, where);
    detail::read_opt(j, "n_seeds", n.n_seeds, where);
    detail::read_opt(j, "n_coarse", n.n_coarse, where);
    detail::read_opt(j, "up_ratio", n.up_ratio, where);
    detail::read_opt(j, "up_hidden", n.up_hidden, where);
    detail::read_opt(j, "offset_scale", n.offset_scale, where);
    detail::read_opt(j, "warp_width", n.warp_width, where);
    detail::read_opt(j, "warp_layers", n.warp_layers, where);
    detail::read_opt(j, "warp_final_std", n.warp_final_std, where);
    detail::read_opt(j, "udf_width", n.udf_width, where);
    detail::read_opt(j, "udf_layers", n.udf_layers, where);
}

/// Overlays the keys present in `j` onto `c`. A "preset": "desk" key starts
/// from the desk-scale defaults before the other keys are applied.
inline void apply_json(const json& j, TrainConfig& c) {
    const std::string where = "train config";
    detail::reject_unknown(j, {"preset", "dataset", "mode", "supervised_no_invo", "seed", "batch_size", "lr", "lr_decay",
                               "lr_decay_epochs", "epochs", "max_iterations", "l1", "l2", "l3", "l4", "clamp_dist",
                               "huber_delta", "pp_pairs", "reduction", "warmup_iterations", "template_refresh",
                               "template_points", "template_candidates", "template_iterations", "template_level_tol",
                               "n_input_points", "n_udf_samples", "checkpoint_every", "network"},
                           where);
    if (j.contains("preset")) {
        const auto p = j.at("preset").get<std::string>();
        if (p == "desk") c = TrainConfig::desk();
        else if (p != "full") throw ConfigError(where + ": unknown preset '" + p + "' (expected desk or full)");
    }
    detail::read_opt(j, "dataset", c.dataset, where);
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    detail::read_opt(j, "supervised_no_invo", c.supervised_no_invo, where);
    detail::read_opt(j, "seed", c.seed, where);
    detail::read_opt(j, "batch_size", c.batch_size, where);
    detail::read_opt(j, "lr", c.lr, where);
    detail::read_opt(j, "lr_decay", c.lr_decay, where);
    detail::read_opt(j, "lr_decay_epochs", c.lr_decay_epochs, where);
    detail::read_opt(j, "epochs", c.epochs, where);
    detail::read_opt(j, "max_iterations", c.max_iterations, where);
    detail::read_opt(j, "l1", c.completion_weights.l1, where);
    detail::read_opt(j, "l2", c.completion_weights.l2, where);
    detail::read_opt(j, "l3", c.inr_weights.l3, where);
    detail::read_opt(j, "l4", c.inr_weights.l4, where);
    detail::read_opt(j, "clamp_dist", c.inr_weights.clamp_dist, where);
    detail::read_opt(j, "huber_delta", c.inr_weights.huber_delta, where);
    detail::read_opt(j, "pp_pairs", c.inr_weights.pp_pairs, where);
    if (j.contains("reduction")) {
        const auto r = j.at("reduction").get<std::string>();
        if (r == "mean") c.inr_weights.reduction = inr::Reduction::mean;
        else if (r == "sum") c.inr_weights.reduction = inr::Reduction::sum;
        else throw ConfigError(where + ": reduction must be mean or sum");
    }
    detail::read_opt(j, "warmup_iterations", c.warmup_iterations, where);
    detail::read_opt(j, "template_refresh", c.template_refresh, where);
    detail::read_opt(j, "template_points", c.template_points, where);
    detail::read_opt(j, "template_candidates", c.template_extraction.n_candidates, where);
    detail::read_opt(j, "template_iterations", c.template_extraction.iterations, where);
    detail::read_opt(j, "template_level_tol", c.template_extraction.level_tol, where);
    detail::read_opt(j, "n_input_points", c.n_input_points, where);
    detail::read_opt(j, "n_udf_samples", c.n_udf_samples, where);
    detail::read_opt(j, "checkpoint_every", c.checkpoint_every, where);
    if (j.contains("network")) apply_json(j.at("network"), c.network);
}

inline TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    apply_json(j, c);
    return c;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

/// 5e-4 * 0.5^floor(epochs / 500) with the configured base, factor and period.
inline double lr_schedule(double epochs_elapsed, const TrainConfig& cfg) {
    return cfg.lr * std::pow(cfg.lr_decay, std::floor(epochs_elapsed / cfg.lr_decay_epochs));
}

}  // namespace ivc::train
