#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ivc/autodiff/param_set.hpp"
#include "ivc/completion/losses.hpp"
#include "ivc/templateinr/losses.hpp"
#include "ivc/templateinr/projection.hpp"
#include "ivc/trainer/config.hpp"
#include "ivc/trainer/data.hpp"

namespace ivc::train {

enum class Phase { inr, completion };

inline std::string to_string(Phase p) { return p == Phase::inr ? "INR" : "COMPLETION"; }

/// The three parameter groups: theta_G (encoder + generator), theta_U
/// (upsampler), theta_T (warp + template UDF).
struct Model {
    TrainConfig cfg;
    completion::CompletionNet completion;
    inr::TemplateNet inr;

    explicit Model(const TrainConfig& c)
        : cfg(c), completion(c.network, mix_seed(c.seed, 1)), inr(c.network, mix_seed(c.seed, 2)) {}
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    std::vector<ad::ParamSet*> sets() { return {&completion.theta_g(), &completion.theta_u(), &inr.theta_t()}; }
    std::vector<const ad::ParamSet*> sets() const {
        return {&completion.theta_g(), &completion.theta_u(), &inr.theta_t()};
    }
};

/// One row of the loss log. Components a phase does not compute stay empty.
struct StepRecord {
    std::size_t iteration = 0;
    Phase phase = Phase::inr;
    std::optional<double> l_t, l_pw, l_pp, l_g, l_u, l_invo, l_part;
    double lr = 0.0;
};

inline constexpr const char* kLossLogHeader = "iteration,phase,L_T,L_pw,L_pp,L_G,L_U,L_invo,L_part,lr";

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv_row(const StepRecord& r) {
    std::string s = std::to_string(r.iteration) + "," + to_string(r.phase);
    for (const auto& v : {r.l_t, r.l_pw, r.l_pp, r.l_g, r.l_u, r.l_invo, r.l_part}) s += "," + (v ? format_double(*v) : "");
    return s + "," + format_double(r.lr);
}

class Trainer {
public:
    Trainer(const TrainConfig& cfg, std::shared_ptr<const SplitData> data)
        : cfg_(cfg), data_(std::move(data)), model_(std::make_unique<Model>(cfg)), rng_(mix_seed(cfg.seed, 3)) {
        cfg_.validate();
        if (!data_ || data_->observations.empty()) throw ConfigError("train: no training observations");
        if (cfg_.batch_size > data_->instance_count())
            throw ConfigError("train: batch_size " + std::to_string(cfg_.batch_size) + " exceeds the " +
                              std::to_string(data_->instance_count()) + " distinct training instances");
        if (cfg_.mode == Mode::supervised && data_->gt.size() != data_->instance_count())
            throw ConfigError("train: supervised mode needs complete reference samples for every training instance");
    }

    const TrainConfig& config() const { return cfg_; }
    Model& model() { return *model_; }
    const Model& model() const { return *model_; }
    std::size_t iteration() const { return iteration_; }
    const std::vector<Vec3>& template_cloud() const { return template_; }
    std::size_t template_refreshes() const { return template_refreshes_; }
    const std::vector<StepRecord>& history() const { return history_; }

    std::size_t total_iterations() const {
        if (cfg_.max_iterations > 0) return cfg_.max_iterations;
        const double per_epoch = static_cast<double>(data_->observations.size()) / static_cast<double>(cfg_.batch_size);
        return static_cast<std::size_t>(std::ceil(static_cast<double>(cfg_.epochs) * per_epoch));
    }

    double epochs_elapsed(std::size_t it) const {
        return static_cast<double>(it) * static_cast<double>(cfg_.batch_size) /
               static_cast<double>(data_->observations.size());
    }

    /// Batch-wise alternation starting with INR; the ablations pin one phase.
    Phase phase_at(std::size_t it) const {
        if (cfg_.mode == Mode::inr_only) return Phase::inr;
        if (cfg_.mode == Mode::completion_only) return Phase::completion;
        return it % 2 == 0 ? Phase::inr : Phase::completion;
    }

    bool warming_up() const { return iteration_ < cfg_.warmup_iterations; }

    StepRecord step() {
        const Phase phase = phase_at(iteration_);
        StepRecord rec;
        rec.iteration = iteration_;
        rec.phase = phase;
        rec.lr = lr_schedule(epochs_elapsed(iteration_), cfg_);
        const auto batch = build_batch(*data_, cfg_.batch_size, rng_);
        if (phase == Phase::inr)
            inr_step(batch, rec);
        else
            completion_step(batch, rec);
        ++iteration_;
        history_.push_back(rec);
        return rec;
    }

    /// Writes <prefix>.ivck (parameters and Adam moments) and <prefix>.json
    /// (config, iteration, RNG state, template cloud).
    void save(const std::filesystem::path& prefix) const {
        if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
        ad::save_checkpoint(prefix.string() + ".ivck", std::as_const(*model_).sets());
        std::ostringstream rng_state;
        rng_state << rng_;
        std::vector<double> flat;
        flat.reserve(template_.size() * 3);
        for (const auto& p : template_) flat.insert(flat.end(), {p.x(), p.y(), p.z()});
        json j{{"format_version", 1},
               {"iteration", iteration_},
               {"rng", rng_state.str()},
               {"template", flat},
               {"template_iteration", template_iteration_ ? json(*template_iteration_) : json(nullptr)},
               {"template_refreshes", template_refreshes_},
               {"config", to_json(cfg_)}};
        write_json_file(prefix.string() + ".json", j);
    }

    /// Restores a checkpoint written by save() with the same configuration.
    void load(const std::filesystem::path& prefix) {
        const json j = read_json_file(prefix.string() + ".json");
        if (j.at("config") != to_json(cfg_))
            throw ConfigError(prefix.string() + ".json: checkpoint was written with a different configuration");
        ad::load_checkpoint(prefix.string() + ".ivck", model_->sets());
        iteration_ = j.at("iteration").get<std::size_t>();
        std::istringstream rng_state(j.at("rng").get<std::string>());
        rng_state >> rng_;
        if (!rng_state) throw IoError(prefix.string() + ".json: bad RNG state");
        const auto flat = j.at("template").get<std::vector<double>>();
        if (flat.size() % 3 != 0) throw IoError(prefix.string() + ".json: template is not a list of 3D points");
        template_.clear();
        for (std::size_t i = 0; i < flat.size(); i += 3) template_.emplace_back(flat[i], flat[i + 1], flat[i + 2]);
        template_tensor_ = template_.empty() ? Tensor() : points_tensor(template_);
        const auto& ti = j.at("template_iteration");
        template_iteration_ = ti.is_null() ? std::nullopt : std::optional<std::size_t>(ti.get<std::size_t>());
        template_refreshes_ = j.at("template_refreshes").get<std::size_t>();
        history_.clear();
    }

private:
    struct InputSample {
        Tensor xp;
        std::vector<Vec3> udf_pos;
        std::vector<double> udf_d;
    };

    InputSample draw_input(const scan::PartialObservation& obs, bool with_udf) {
        InputSample s;
        const auto& pts = obs.surface_points.points;
        s.xp = points_tensor(pts, sample_indices(pts.size(), cfg_.n_input_points, rng_));
        if (with_udf) {
            for (auto i : sample_indices(obs.udf_samples.size(), cfg_.n_udf_samples, rng_)) {
                s.udf_pos.push_back(obs.udf_samples[i].position);
                s.udf_d.push_back(obs.udf_samples[i].distance);
            }
        }
        return s;
    }

    void set_phase_freeze(Phase phase) {
        // inr_only has no completion phase; its encoder learns with theta_T.
        const bool inr = phase == Phase::inr;
        model_->inr.theta_t().set_frozen(!inr);
        model_->completion.theta_g().set_frozen(inr && cfg_.mode != Mode::inr_only);
        model_->completion.theta_u().set_frozen(inr);
    }

    static void check_finite(const StepRecord& r) {
        bool ok = true;
        for (const auto& v : {r.l_t, r.l_pw, r.l_pp, r.l_g, r.l_u, r.l_invo, r.l_part})
            if (v && !std::isfinite(*v)) ok = false;
        if (ok) return;
        std::string msg = "non-finite loss at iteration " + std::to_string(r.iteration) + " (" + to_string(r.phase) + "):";
        const char* names[] = {"L_T", "L_pw", "L_pp", "L_G", "L_U", "L_invo", "L_part"};
        std::size_t k = 0;
        for (const auto& v : {r.l_t, r.l_pw, r.l_pp, r.l_g, r.l_u, r.l_invo, r.l_part}) {
            if (v) msg += std::string(" ") + names[k] + "=" + format_double(*v);
            ++k;
        }
        throw NumericError(msg);
    }

    static void accumulate(std::optional<double>& slot, double v, double w) { slot = slot.value_or(0.0) + w * v; }

    void inr_step(const std::vector<std::size_t>& batch, StepRecord& rec) {
        set_phase_freeze(Phase::inr);
        auto& comp = model_->completion;
        auto& net = model_->inr;
        const double w = 1.0 / static_cast<double>(batch.size());
        const bool anchors = cfg_.mode != Mode::inr_only && !warming_up();
        for (auto row : batch) {
            auto s = draw_input(data_->observations[row], true);
            Tensor code;
            if (cfg_.mode == Mode::inr_only) {
                code = comp.encode(s.xp);
            } else {
                // Completion net is frozen here, so this forward records no history.
                const auto out = comp.forward(s.xp);
                code = out.c_x;
                if (anchors) {
                    // Output points whose parent is a generated seed, at distance 0.
                    for (std::size_t i = 0; i < out.x.rows(); ++i) {
                        if (out.x_parent_tags[i] != geo::Provenance::generated) continue;
                        s.udf_pos.emplace_back(out.x(i, 0), out.x(i, 1), out.x(i, 2));
                        s.udf_d.push_back(0.0);
                    }
                }
            }
            const Tensor l_t = inr::loss_t(net, points_tensor(s.udf_pos), s.udf_d, code, cfg_.inr_weights.clamp_dist);
            const Tensor warped = net.warp(s.xp, code);
            const auto& iw = cfg_.inr_weights;
            const Tensor l_pw = inr::loss_pw(warped, s.xp, iw.huber_delta, iw.reduction);
            const Tensor l_pp = inr::loss_pp(warped, s.xp, inr::sample_pairs(s.xp.rows(), iw.pp_pairs, rng_), iw.reduction);
            const Tensor total = inr::inr_loss(l_t, l_pw, l_pp, iw);
            accumulate(rec.l_t, l_t.item(), w);
            accumulate(rec.l_pw, l_pw.item(), w);
            accumulate(rec.l_pp, l_pp.item(), w);
            check_finite(rec);
            ad::backward(ad::scale(total, w));
        }
        const ad::AdamConfig adam{0.9, 0.999, rec.lr, 1e-8};
        net.theta_t().adam_step(adam);
        if (cfg_.mode == Mode::inr_only) comp.theta_g().adam_step(adam);
    }

    void refresh_template_if_due() {
        if (template_iteration_ && iteration_ - *template_iteration_ < cfg_.template_refresh) return;
        template_iteration_ = iteration_;
        ++template_refreshes_;
        const auto res = inr::extract_template(model_->inr, cfg_.template_points, cfg_.template_extraction,
                                               mix_seed(cfg_.seed, 1000 + iteration_));
        // An empty level set keeps the previous template (or none) until the next refresh.
        if (res.points.empty()) return;
        template_ = res.points.points;
        template_tensor_ = points_tensor(template_);
    }

    completion::CompletionTarget target_for(const scan::PartialObservation& obs) {
        completion::CompletionTarget t;
        switch (cfg_.mode) {
            case Mode::supervised: {
                const auto& gt = data_->gt.at(obs.instance_id);
                t.kind = completion::CompletionTarget::Kind::ground_truth;
                t.cloud = points_tensor(gt, sample_indices(gt.size(), comp_output_points(), rng_));
                break;
            }
            case Mode::full:
            case Mode::no_invo:
                if (!template_tensor_.defined()) break;
                t.kind = completion::CompletionTarget::Kind::template_cloud;
                t.cloud = template_tensor_;
                t.warp = [this](const Tensor& p, const Tensor& c) { return model_->inr.warp(p, c); };
                break;
            default:
                break;
        }
        return t;
    }

    std::size_t comp_output_points() const { return cfg_.network.n_output(); }

    void completion_step(const std::vector<std::size_t>& batch, StepRecord& rec) {
        set_phase_freeze(Phase::completion);
        auto& comp = model_->completion;
        // The template only exists once warm-up is over.
        if ((cfg_.mode == Mode::full || cfg_.mode == Mode::no_invo) && !warming_up()) refresh_template_if_due();
        const completion::CompletionWeights cw{cfg_.l1_effective(), cfg_.completion_weights.l2};
        const double w = 1.0 / static_cast<double>(batch.size());
        for (auto row : batch) {
            const auto& obs = data_->observations[row];
            const auto s = draw_input(obs, false);
            const auto target = target_for(obs);
            const auto out = comp.forward(s.xp);
            const auto terms = completion::completion_losses(comp, out, s.xp, target, cw);
            accumulate(rec.l_g, terms.l_g.item(), w);
            accumulate(rec.l_u, terms.l_u.item(), w);
            accumulate(rec.l_invo, terms.l_invo.item(), w);
            accumulate(rec.l_part, terms.l_part.item(), w);
            check_finite(rec);
            // theta_G minimizes L_G + l1 L_invo and theta_U minimizes L_U + l2 L_part;
            // gradients of the theta_U objective that reach theta_G are discarded.
            ad::backward(ad::scale(terms.theta_g, w));
            auto g_saved = comp.theta_g().save_grads();
            ad::backward(ad::scale(terms.theta_u, w));
            comp.theta_g().restore_grads(std::move(g_saved));
        }
        const ad::AdamConfig adam{0.9, 0.999, rec.lr, 1e-8};
        comp.theta_g().adam_step(adam);
        comp.theta_u().adam_step(adam);
    }

    TrainConfig cfg_;
    std::shared_ptr<const SplitData> data_;
    std::unique_ptr<Model> model_;
    std::mt19937_64 rng_;
    std::size_t iteration_ = 0;
    std::vector<Vec3> template_;
    Tensor template_tensor_;
    std::optional<std::size_t> template_iteration_;
    std::size_t template_refreshes_ = 0;
    std::vector<StepRecord> history_;
};

/// Appends rows to a CSV loss log, writing the header first when the file is new.
class LossLog {
public:
    LossLog(const std::filesystem::path& path, bool append) {
        const bool fresh = !append || !std::filesystem::exists(path);
        out_.open(path, fresh ? std::ios::trunc : std::ios::app);
        if (!out_) throw IoError("cannot write loss log " + path.string());
        if (fresh) out_ << kLossLogHeader << '\n';
    }
    void write(const StepRecord& r) {
        out_ << to_csv_row(r) << '\n';
        if (!out_) throw IoError("loss log write failed");
    }
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

struct TrainResult {
    std::size_t iterations = 0;
    std::filesystem::path checkpoint;  // prefix of the final checkpoint
    std::filesystem::path loss_log;
};

/// Runs the loop to the iteration budget under out_dir: loss_log.csv,
/// ckpt/iter_<k>.{ivck,json} every checkpoint_every iterations, and the
/// final checkpoint.{ivck,json}. `resume_from` continues a saved run.
inline TrainResult train(const TrainConfig& cfg, std::shared_ptr<const SplitData> data,
                         const std::filesystem::path& out_dir, const std::optional<std::filesystem::path>& resume_from = {},
                         const std::function<void(const StepRecord&)>& on_step = {}) {
    std::filesystem::create_directories(out_dir);
    Trainer t(cfg, std::move(data));
    if (resume_from) t.load(*resume_from);
    TrainResult res;
    res.loss_log = out_dir / "loss_log.csv";
    LossLog log(res.loss_log, resume_from.has_value());
    const std::size_t total = t.total_iterations();
    while (t.iteration() < total) {
        const auto rec = t.step();
        log.write(rec);
        if (on_step) on_step(rec);
        if (cfg.checkpoint_every > 0 && t.iteration() % cfg.checkpoint_every == 0 && t.iteration() < total)
            t.save(out_dir / "ckpt" / ("iter_" + std::to_string(t.iteration())));
    }
    log.flush();
    res.iterations = t.iteration();
    res.checkpoint = out_dir / "checkpoint";
    t.save(res.checkpoint);
    return res;
}

/// Rebuilds the networks of a saved run for inference.
inline std::unique_ptr<Model> load_model(const std::filesystem::path& prefix) {
    const json j = read_json_file(prefix.string() + ".json");
    auto cfg = config_from_json(j.at("config"));
    auto model = std::make_unique<Model>(cfg);
    ad::load_checkpoint(prefix.string() + ".ivck", model->sets());
    return model;
}

inline std::vector<Vec3> load_template(const std::filesystem::path& prefix) {
    const json j = read_json_file(prefix.string() + ".json");
    const auto flat = j.at("template").get<std::vector<double>>();
    std::vector<Vec3> out;
    for (std::size_t i = 0; i + 2 < flat.size(); i += 3) out.emplace_back(flat[i], flat[i + 1], flat[i + 2]);
    return out;
}

}  // namespace ivc::train
