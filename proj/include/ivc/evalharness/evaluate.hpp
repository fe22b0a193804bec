#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ivc/evalharness/report.hpp"
#include "ivc/extract/extract.hpp"
#include "ivc/scansynth/primitives.hpp"
#include "ivc/trainer/trainer.hpp"

namespace ivc::eval {

using ad::Tensor;
using train::Mode;

struct EvalConfig {
    std::size_t threads = 1;
    std::uint64_t seed = 0;
    std::optional<std::size_t> n_points;  // completed points per shape; default network n_output
    inr::ProjectionConfig projection = extract::point_projection_defaults();
    std::size_t corr_pairs = 20;
    std::size_t corr_queries = 256;
};

struct Completion {
    geo::PointSet completed;
    std::optional<geo::PointSet> direct;  // completion network output X
    Tensor code;                          // shape code fed to the warp; undefined when there is none
};

/// Completes one partial input the way the mode's model is meant to be used:
/// the zero level set of T(D(x; c)) with c = E(X) (c = E(X') for inr_only),
/// or the network output X for completion_only. The model must be frozen.
inline Completion complete(const train::Model& model, const Tensor& xp, std::size_t n_points, std::uint64_t seed,
                           const inr::ProjectionConfig& proj) {
    Completion out;
    const Mode mode = model.cfg.mode;
    if (mode == Mode::inr_only) {
        out.code = model.completion.encode(xp);
    } else {
        const auto fwd = model.completion.forward(xp);
        out.direct = geo::from_tensor(fwd.x);
        out.code = fwd.c_x;
        if (mode == Mode::completion_only) {
            out.completed = *out.direct;
            out.code = Tensor();
            return out;
        }
    }
    const auto& net = model.inr;
    const Tensor code = out.code;
    out.completed = extract::project_points([&net, &code](const Tensor& x) { return net.field(x, code); }, n_points,
                                            seed, proj);
    return out;
}

inline void freeze_all(train::Model& m) {
    for (auto* s : m.sets()) s->set_frozen(true);
}

/// Ground-truth correspondence points of a primitive: the shared cube
/// parameterization mapped through the shape and its normalization.
inline std::vector<Vec3> primitive_points(const scan::DatasetManifest& manifest, const scan::InstanceEntry& e,
                                          const std::vector<Vec3>& cube_points) {
    const auto shape = manifest.primitive(e);
    if (!shape) return {};
    std::vector<Vec3> out;
    out.reserve(cube_points.size());
    for (const auto& q : cube_points) out.push_back(shape->map(q));  // map() already normalizes
    return out;
}

/// Per test observation: complete, then F1 / CD against the instance's
/// complete reference samples, Fidelity against the input, MMD against the
/// training references. Corr_l2 on pairs of primitive instances.
inline MetricsRecord evaluate(train::Model& model, const train::SplitData& test,
                              const std::vector<geo::PointSet>& reference_corpus, const EvalConfig& cfg,
                              const std::string& checkpoint_id = {}) {
    freeze_all(model);
    MetricsRecord rec;
    rec.mode = train::to_string(model.cfg.mode);
    rec.seed = cfg.seed;
    rec.checkpoint = checkpoint_id;
    rec.split = test.split == scan::Split::train ? "train" : "test";
    const std::size_t n_points = cfg.n_points.value_or(model.cfg.network.n_output());
    const std::size_t n_obs = test.observations.size();
    rec.rows.resize(n_obs);
    std::vector<Tensor> codes(n_obs);
    std::vector<geo::PointSet> completed(n_obs);
    parallel_for(n_obs, cfg.threads, [&](std::size_t i) {
        const auto& obs = test.observations[i];
        auto& row = rec.rows[i];
        row.instance_id = obs.instance_id;
        row.view_id = obs.view_id;
        const Tensor xp = train::eval_input(obs, model.cfg.n_input_points, cfg.seed);
        Completion c;
        try {
            c = complete(model, xp, n_points, mix_seed(cfg.seed, (std::uint64_t{obs.instance_id} << 32) | obs.view_id),
                         cfg.projection);
        } catch (const NumericError& e) {
            row.skipped = std::string("extraction failed: ") + e.what();
            return;
        }
        codes[i] = c.code;
        completed[i] = c.completed;
        const geo::PointSet partial = geo::from_tensor(xp);
        row.fidelity = eval_fidelity(partial, c.completed);
        if (!reference_corpus.empty()) row.mmd = eval_mmd(c.completed, reference_corpus);
        const auto gt = test.gt.find(obs.instance_id);
        if (gt == test.gt.end()) {
            row.skipped = "no complete reference samples";
            return;
        }
        const geo::PointSet ref(gt->second);
        row.cd = kCdScale * geo::chamfer_bi(c.completed, ref);
        row.f1 = geo::f1_score(c.completed, ref, kF1Tau);
        if (c.direct) row.cd_direct = kCdScale * geo::chamfer_bi(*c.direct, ref);
    });

    // Correspondences between consecutive primitive instances of the same
    // family, first test view of each, queried at shared cube points.
    if (model.cfg.mode == Mode::completion_only || cfg.corr_pairs == 0) return rec;
    std::vector<std::size_t> first_view;  // row of the first test view per instance
    for (const auto& rows : test.by_instance)
        if (!rows.empty() && rec.rows[rows.front()].skipped.empty()) first_view.push_back(rows.front());
    std::mt19937_64 rng(mix_seed(cfg.seed, 77));
    std::vector<Vec3> cube;
    for (std::size_t k = 0; k < cfg.corr_queries; ++k) cube.push_back(scan::sample_cube_surface(rng));
    auto entry = [&](std::uint32_t id) -> const scan::InstanceEntry& {
        for (const auto& e : test.manifest.instances)
            if (e.id == id) return e;
        throw ContractError("evaluate: instance " + std::to_string(id) + " missing from manifest");
    };
    std::size_t pairs = 0;
    for (std::size_t k = 0; k + 1 < first_view.size() && pairs < cfg.corr_pairs; ++k) {
        const std::size_t ia = first_view[k], ib = first_view[k + 1];
        const auto& ea = entry(rec.rows[ia].instance_id);
        const auto& eb = entry(rec.rows[ib].instance_id);
        if (!ea.family || !eb.family || *ea.family != *eb.family) continue;
        const auto qa = primitive_points(test.manifest, ea, cube);
        const auto gb = primitive_points(test.manifest, eb, cube);
        const auto pred = extract::correspondences(extract::to_template_space(model.inr, qa, codes[ia]),
                                                   completed[ib].points,
                                                   extract::to_template_space(model.inr, completed[ib].points, codes[ib]));
        rec.rows[ia].corr_l2 = corr_l2(pred.points, gb);
        ++pairs;
    }
    return rec;
}

/// Complete reference samples of every instance of a split, as a corpus.
inline std::vector<geo::PointSet> reference_corpus(const train::SplitData& d) {
    std::vector<geo::PointSet> out;
    for (const auto& [id, pts] : d.gt) out.emplace_back(pts);
    return out;
}

}  // namespace ivc::eval
