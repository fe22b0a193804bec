#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ivc/evalharness/evaluate.hpp"
#include "ivc/selftest/checks.hpp"

#ifndef IVC_VERSION
#define IVC_VERSION "dev"
#endif

namespace ivc::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ad::Tensor;

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2 };

inline std::string version_string() {
    std::string s = std::string("ivc ") + IVC_VERSION + " (C++" + std::to_string(__cplusplus / 100 % 100);
#if defined(__clang__)
    s += ", clang " __clang_version__;
#elif defined(__GNUC__)
    s += ", gcc " __VERSION__;
#endif
#ifdef NDEBUG
    s += ", release";
#else
    s += ", debug";
#endif
    return s + ")";
}

inline std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Globals {
    std::uint64_t seed = 0;
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::size_t threads = default_threads();
};

/// Flags override config-file keys; only flags actually given are applied.
inline void overlay(json& j, const CLI::Option* opt, const std::string& key, const json& value) {
    if (opt->count() > 0) j[key] = value;
}

inline json load_config(const Globals& g) { return g.config ? train::read_json_file(*g.config) : json::object(); }

/// Reads a flat JSON object into the given keys, rejecting any other key.
template <class T>
void take(const json& j, const std::string& key, T& dst, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": key '" + key + "' has the wrong type");
    }
}

inline void write_resolved(const fs::path& dir, const std::string& command, const Globals& g, json body) {
    fs::create_directories(dir);
    json j;
    j["command"] = command;
    j["version"] = IVC_VERSION;
    j["seed"] = g.seed;
    j["threads"] = g.threads;
    j["resolved"] = std::move(body);
    train::write_json_file(dir / "resolved_config.json", j);
}

inline Tensor input_tensor(const scan::PartialObservation& obs, std::size_t n, std::uint64_t seed) {
    return train::eval_input(obs, n, seed);
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOptions {
    std::string family = "box";
    std::string meshes;  // directory of .obj/.ply meshes; replaces --family
    std::size_t instances = 50;
    int subdiv = 12;
    scan::DatasetConfig data;
};

inline json to_json(const GenDataOptions& o) {
    const auto& d = o.data;
    return {{"family", o.family},
            {"meshes", o.meshes},
            {"instances", o.instances},
            {"subdiv", o.subdiv},
            {"views", d.views},
            {"train_views", d.train_views},
            {"test_views", d.test_views},
            {"points", d.n_surface},
            {"gt_points", d.gt_points},
            {"n_near", d.udf.n_near},
            {"n_uniform", d.udf.n_uniform},
            {"camera_radius", d.camera_radius},
            {"corpus", d.corpus}};
}

inline std::vector<scan::DatasetInstance> mesh_instances(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("--meshes: " + dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (ext == ".obj" || ext == ".ply") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("--meshes: no .obj or .ply files in " + dir.string());
    std::vector<scan::DatasetInstance> out;
    for (const auto& f : files) {
        auto [mesh, xf] = scan::normalize_mesh(scan::read_mesh(f));
        scan::DatasetInstance inst;
        inst.name = f.stem().string();
        inst.mesh = std::move(mesh);
        inst.transform = xf;
        out.push_back(std::move(inst));
    }
    return out;
}

// ---------------------------------------------------------------------------
// eval / extract helpers

inline void require_dataset(const fs::path& root) {
    if (!fs::exists(root / "manifest.json"))
        throw ConfigError("--dataset: " + root.string() + " has no manifest.json (run gen-data first)");
}

inline std::unique_ptr<train::Model> load_frozen(const fs::path& prefix) {
    if (!fs::exists(prefix.string() + ".json"))
        throw ConfigError("--checkpoint: " + prefix.string() + ".json does not exist");
    auto m = train::load_model(prefix);
    eval::freeze_all(*m);
    return m;
}

/// The observation named by --obs, or by --instance/--view inside --dataset.
inline scan::PartialObservation pick_observation(const std::string& obs_file, const std::string& dataset,
                                                 std::optional<std::uint32_t> instance, std::uint32_t view) {
    if (!obs_file.empty()) return scan::read_observation(obs_file);
    if (dataset.empty() || !instance) throw ConfigError("need --obs, or --dataset with --instance");
    return scan::read_observation(fs::path(dataset) / scan::DatasetManifest::observation_name(*instance, view));
}

inline void write_csv_correspondences(const fs::path& path, const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    std::string s = "ax,ay,az,bx,by,bz\n";
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int k = 0; k < 3; ++k) s += train::format_double(a[i][k]) + ",";
        for (int k = 0; k < 3; ++k) s += train::format_double(b[i][k]) + (k == 2 ? "\n" : ",");
    }
    eval::write_text(path, s);
}

// ---------------------------------------------------------------------------

inline std::string print_checks(std::ostream& os, const std::string& group, const std::vector<selftest::Check>& checks) {
    std::string first_failure;
    for (const auto& c : checks) {
        os << (c.passed ? "PASS " : "FAIL ") << group << ": " << c.name << " (" << c.detail << ")\n";
        if (!c.passed && first_failure.empty()) first_failure = group + ": " + c.name;
    }
    return first_failure;
}

/// Parses argv and runs one subcommand. 0 on success, 1 on invalid input
/// (flags, config, file contents), 2 when the run itself fails.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Self-supervised point cloud completion with involution and implicit templates", "ivc"};
    app.require_subcommand(1);
    Globals g;
    bool show_version = false;
    app.add_flag("--version", show_version, "Print build metadata and exit");
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--config", g.config, "JSON config; flags override its keys");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--threads", g.threads, "Worker threads (default: logical cores)")->check(CLI::PositiveNumber);

    // gen-data
    GenDataOptions gd;
    auto* s_gen = app.add_subcommand("gen-data", "Generate a synthetic primitive or mesh corpus");
    auto* o_family = s_gen->add_option("--family", gd.family, "box, ellipsoid or capsule_couch");
    auto* o_meshes = s_gen->add_option("--meshes", gd.meshes, "Directory of watertight .obj/.ply meshes");
    auto* o_instances = s_gen->add_option("--instances", gd.instances, "Number of primitive instances");
    auto* o_views = s_gen->add_option("--views", gd.data.views, "Camera views per instance");
    auto* o_trv = s_gen->add_option("--train-views", gd.data.train_views, "Views per instance in the train split");
    auto* o_tev = s_gen->add_option("--test-views", gd.data.test_views, "Views per instance in the test split");
    auto* o_points = s_gen->add_option("--points", gd.data.n_surface, "Surface points per partial view");
    auto* o_gtp = s_gen->add_option("--gt-points", gd.data.gt_points, "Complete reference samples per instance");
    auto* o_near = s_gen->add_option("--udf-near", gd.data.udf.n_near, "Near-surface UDF samples per view");
    auto* o_uni = s_gen->add_option("--udf-uniform", gd.data.udf.n_uniform, "Uniform UDF samples per view");
    auto* o_subdiv = s_gen->add_option("--subdiv", gd.subdiv, "Primitive tessellation per cube face edge");

    // train
    std::string tr_dataset, tr_mode, tr_preset, tr_resume;
    std::size_t tr_iterations = 0, tr_batch = 0, tr_ckpt = 0;
    double tr_lr = 0.0;
    bool tr_sup_no_invo = false;
    auto* s_train = app.add_subcommand("train", "Train the completion network and the template INR");
    auto* o_tr_dataset = s_train->add_option("--dataset", tr_dataset, "Dataset directory (manifest.json)");
    auto* o_tr_mode = s_train->add_option("--mode", tr_mode, "full, no_invo, inr_only, completion_only or supervised");
    auto* o_tr_preset = s_train->add_option("--preset", tr_preset, "desk or full defaults")->check(CLI::IsMember({"desk", "full"}));
    auto* o_tr_iter = s_train->add_option("--iterations", tr_iterations, "Iteration budget");
    auto* o_tr_batch = s_train->add_option("--batch-size", tr_batch, "Observations per batch");
    auto* o_tr_lr = s_train->add_option("--lr", tr_lr, "Base learning rate");
    auto* o_tr_ckpt = s_train->add_option("--checkpoint-every", tr_ckpt, "Periodic checkpoint interval (0 disables)");
    auto* o_tr_sni = s_train->add_flag("--supervised-no-invo", tr_sup_no_invo, "Supervised mode without L_invo");
    s_train->add_option("--resume", tr_resume, "Checkpoint prefix to continue from");

    // eval
    std::string ev_ckpt, ev_dataset, ev_split = "test";
    std::size_t ev_candidates = 0, ev_points = 0, ev_pairs = 20;
    double ev_tol = 0.0;
    auto* s_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    s_eval->add_option("--checkpoint", ev_ckpt, "Checkpoint prefix")->required();
    s_eval->add_option("--dataset", ev_dataset, "Dataset directory (default: the one used for training)");
    s_eval->add_option("--split", ev_split, "test or train")->check(CLI::IsMember({"test", "train"}));
    auto* o_ev_cand = s_eval->add_option("--candidates", ev_candidates, "Projection candidates per shape");
    auto* o_ev_points = s_eval->add_option("--points", ev_points, "Completed points per shape");
    auto* o_ev_tol = s_eval->add_option("--level-tol", ev_tol, "Projection acceptance threshold");
    s_eval->add_option("--corr-pairs", ev_pairs, "Instance pairs scored for correspondence");

    // extract
    std::string ex_ckpt, ex_obs, ex_dataset;
    std::optional<std::uint32_t> ex_instance;
    std::uint32_t ex_view = 0;
    std::size_t ex_res = 128, ex_points = 0;
    double ex_eps = 0.01;
    auto* s_ext = app.add_subcommand("extract", "Complete one observation; write points and a mesh");
    s_ext->add_option("--checkpoint", ex_ckpt, "Checkpoint prefix")->required();
    s_ext->add_option("--obs", ex_obs, "Observation file (.pudf)");
    s_ext->add_option("--dataset", ex_dataset, "Dataset directory, with --instance and --view");
    s_ext->add_option("--instance", ex_instance, "Instance id");
    s_ext->add_option("--view", ex_view, "View id");
    s_ext->add_option("--resolution", ex_res, "Marching cubes grid resolution")->check(CLI::Range(8, 1024));
    s_ext->add_option("--eps", ex_eps, "Level of the extracted shell")->check(CLI::PositiveNumber);
    s_ext->add_option("--points", ex_points, "Completed points (default: network output size)");

    // correspond
    std::string co_ckpt, co_a, co_b;
    std::size_t co_points = 0;
    auto* s_cor = app.add_subcommand("correspond", "Dense correspondences between two completed observations");
    s_cor->add_option("--checkpoint", co_ckpt, "Checkpoint prefix")->required();
    s_cor->add_option("--source", co_a, "Source observation (.pudf)")->required();
    s_cor->add_option("--target", co_b, "Target observation (.pudf)")->required();
    s_cor->add_option("--points", co_points, "Completed points per shape");

    // report
    std::vector<std::string> rp_runs;
    auto* s_rep = app.add_subcommand("report", "Compare the metrics of several eval directories");
    s_rep->add_option("runs", rp_runs, "Eval output directories (metrics.json)")->required()->expected(1, -1);

    // selftest
    bool st_full = false;
    auto* s_self = app.add_subcommand("selftest", "Gradient checks, metric oracles and an optional pipeline run");
    s_self->add_flag("--full", st_full, "Also run the 10-instance pipeline smoke test");

    for (auto* s : {s_gen, s_train, s_eval, s_ext, s_cor, s_rep, s_self}) s->fallthrough();

    // --version short-circuits the subcommand requirement.
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--version") {
            out << version_string() << "\n";
            return kOk;
        }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (s_gen->parsed()) {
            json j = load_config(g);
            overlay(j, o_family, "family", gd.family);
            overlay(j, o_meshes, "meshes", gd.meshes);
            overlay(j, o_instances, "instances", gd.instances);
            overlay(j, o_views, "views", gd.data.views);
            overlay(j, o_trv, "train_views", gd.data.train_views);
            overlay(j, o_tev, "test_views", gd.data.test_views);
            overlay(j, o_points, "points", gd.data.n_surface);
            overlay(j, o_gtp, "gt_points", gd.data.gt_points);
            overlay(j, o_near, "n_near", gd.data.udf.n_near);
            overlay(j, o_uni, "n_uniform", gd.data.udf.n_uniform);
            overlay(j, o_subdiv, "subdiv", gd.subdiv);
            train::detail::reject_unknown(j, {"family", "meshes", "instances", "subdiv", "views", "train_views", "test_views",
                                              "points", "gt_points", "n_near", "n_uniform", "camera_radius", "corpus"},
                                          "gen-data config");
            const std::string w = "gen-data config";
            take(j, "family", gd.family, w);
            take(j, "meshes", gd.meshes, w);
            take(j, "instances", gd.instances, w);
            take(j, "subdiv", gd.subdiv, w);
            take(j, "views", gd.data.views, w);
            take(j, "train_views", gd.data.train_views, w);
            take(j, "test_views", gd.data.test_views, w);
            take(j, "points", gd.data.n_surface, w);
            take(j, "gt_points", gd.data.gt_points, w);
            take(j, "n_near", gd.data.udf.n_near, w);
            take(j, "n_uniform", gd.data.udf.n_uniform, w);
            take(j, "camera_radius", gd.data.camera_radius, w);
            take(j, "corpus", gd.data.corpus, w);
            gd.data.seed = g.seed;
            gd.data.threads = g.threads;
            const fs::path root = g.out.value_or("data");
            std::vector<scan::DatasetInstance> instances;
            if (!gd.meshes.empty()) {
                instances = mesh_instances(gd.meshes);
                if (j.find("corpus") == j.end()) gd.data.corpus = fs::path(gd.meshes).filename().string();
            } else {
                const auto family = scan::parse_family(gd.family);
                if (gd.instances < 1) throw ConfigError("--instances must be at least 1");
                if (gd.subdiv < 1) throw ConfigError("--subdiv must be at least 1");
                instances = scan::primitive_instances(gd.instances, family, g.seed, gd.subdiv);
                if (j.find("corpus") == j.end()) gd.data.corpus = gd.family;
            }
            gd.data.validate();
            write_resolved(root, "gen-data", g, to_json(gd));
            const auto m = scan::build_dataset(instances, gd.data, root);
            std::size_t files = 0;
            for (const auto& e : m.instances) files += e.views_available.size();
            out << "wrote " << files << " observations for " << m.instances.size() << " instances to " << root.string()
                << "\n";
            return kOk;
        }

        if (s_train->parsed()) {
            json j = load_config(g);
            if (o_tr_preset->count()) {
                // The preset is the base; config keys and flags go on top.
                json base;
                base["preset"] = tr_preset;
                for (auto it = j.begin(); it != j.end(); ++it)
                    if (it.key() != "preset") base[it.key()] = it.value();
                j = base;
            }
            overlay(j, o_tr_dataset, "dataset", tr_dataset);
            overlay(j, o_tr_mode, "mode", tr_mode);
            overlay(j, o_tr_iter, "max_iterations", tr_iterations);
            overlay(j, o_tr_batch, "batch_size", tr_batch);
            overlay(j, o_tr_lr, "lr", tr_lr);
            overlay(j, o_tr_ckpt, "checkpoint_every", tr_ckpt);
            overlay(j, o_tr_sni, "supervised_no_invo", tr_sup_no_invo);
            if (app.get_option("--seed")->count()) j["seed"] = g.seed;
            auto cfg = train::config_from_json(j);
            if (cfg.dataset.empty()) throw ConfigError("train: no dataset (use --dataset or the config key 'dataset')");
            require_dataset(cfg.dataset);
            cfg.validate();
            const fs::path dir = g.out.value_or("run");
            g.seed = cfg.seed;
            write_resolved(dir, "train", g, train::to_json(cfg));
            auto data = std::make_shared<const train::SplitData>(
                train::load_split(cfg.dataset, scan::Split::train, cfg.mode == train::Mode::supervised));
            std::optional<fs::path> resume;
            if (!tr_resume.empty()) resume = fs::path(tr_resume);
            std::size_t total = 0;
            const auto res = train::train(cfg, data, dir, resume, [&](const train::StepRecord& r) {
                if (++total % 500 == 0) err << "iteration " << r.iteration + 1 << "\n";
            });
            out << "trained " << res.iterations << " iterations; checkpoint " << res.checkpoint.string() << "\n";
            return kOk;
        }

        if (s_eval->parsed()) {
            auto model = load_frozen(ev_ckpt);
            eval::EvalConfig ec;
            ec.threads = g.threads;
            ec.seed = g.seed;
            ec.corr_pairs = ev_pairs;
            if (o_ev_cand->count()) ec.projection.n_candidates = ev_candidates;
            if (o_ev_points->count()) ec.n_points = ev_points;
            if (o_ev_tol->count()) ec.projection.level_tol = ev_tol;
            const std::string dataset = ev_dataset.empty() ? model->cfg.dataset : ev_dataset;
            require_dataset(dataset);
            const fs::path dir = g.out.value_or("eval");
            write_resolved(dir, "eval", g,
                           {{"checkpoint", ev_ckpt},
                            {"dataset", dataset},
                            {"split", ev_split},
                            {"candidates", ec.projection.n_candidates},
                            {"projection_iterations", ec.projection.iterations},
                            {"level_tol", ec.projection.level_tol},
                            {"points", ec.n_points.value_or(model->cfg.network.n_output())},
                            {"corr_pairs", ec.corr_pairs},
                            {"corr_queries", ec.corr_queries},
                            {"train_config", train::to_json(model->cfg)}});
            const auto split = ev_split == "train" ? scan::Split::train : scan::Split::test;
            const auto data = train::load_split(dataset, split, false);
            auto with_gt = data;
            for (const auto& e : data.manifest.instances) {
                const auto gt = fs::path(dataset) / scan::DatasetManifest::gt_name(e.id);
                if (fs::exists(gt)) with_gt.gt[e.id] = scan::load_points(gt);
            }
            std::vector<geo::PointSet> corpus;
            for (const auto& e : data.manifest.instances) {
                if (e.train_views.empty()) continue;
                const auto gt = fs::path(dataset) / scan::DatasetManifest::gt_name(e.id);
                if (fs::exists(gt)) corpus.emplace_back(scan::load_points(gt));
            }
            const auto rec = eval::evaluate(*model, with_gt, corpus, ec, ev_ckpt);
            std::optional<fs::path> log;
            const auto candidate = fs::path(ev_ckpt).parent_path() / "loss_log.csv";
            if (fs::exists(candidate)) log = candidate;
            eval::emit_report(rec, dir, log);
            for (const auto& c : eval::MetricsRecord::columns()) {
                const auto m = rec.mean(c);
                out << c << " " << (m ? train::format_double(*m) : "n/a") << "\n";
            }
            out << "rows " << rec.rows.size() << " skipped " << rec.skipped_count() << "\n";
            return kOk;
        }

        if (s_ext->parsed()) {
            auto model = load_frozen(ex_ckpt);
            const auto obs = pick_observation(ex_obs, ex_dataset.empty() ? model->cfg.dataset : ex_dataset, ex_instance, ex_view);
            const fs::path dir = g.out.value_or("extract");
            const std::size_t n = ex_points ? ex_points : model->cfg.network.n_output();
            write_resolved(dir, "extract", g,
                           {{"checkpoint", ex_ckpt},
                            {"instance", obs.instance_id},
                            {"view", obs.view_id},
                            {"resolution", ex_res},
                            {"eps", ex_eps},
                            {"points", n}});
            const Tensor xp = input_tensor(obs, model->cfg.n_input_points, g.seed);
            const auto c = eval::complete(*model, xp, n, g.seed, extract::point_projection_defaults());
            scan::write_ply(dir / "points.ply", c.completed.points);
            if (c.direct) scan::write_ply(dir / "network_output.ply", c.direct->points);
            if (c.code.defined()) {
                const auto& net = model->inr;
                const Tensor code = c.code;
                const auto grid = extract::evaluate_grid([&](const Tensor& x) { return net.field(x, code); }, ex_res, g.threads);
                const auto mc = extract::mc_mesh(grid, ex_eps);
                if (mc.empty) throw NumericError("extract: the eps level set does not cross the grid (eps " + std::to_string(ex_eps) + ")");
                scan::write_ply(dir / "mesh.ply", mc.mesh);
                out << "mesh " << mc.mesh.vertices.size() << " vertices " << mc.mesh.triangles.size() << " triangles\n";
            }
            out << "points " << c.completed.size() << "\n";
            return kOk;
        }

        if (s_cor->parsed()) {
            auto model = load_frozen(co_ckpt);
            if (model->cfg.mode == train::Mode::completion_only)
                throw ConfigError("correspond: a completion_only checkpoint has no template");
            const fs::path dir = g.out.value_or("correspond");
            const std::size_t n = co_points ? co_points : model->cfg.network.n_output();
            write_resolved(dir, "correspond", g, {{"checkpoint", co_ckpt}, {"source", co_a}, {"target", co_b}, {"points", n}});
            const auto proj = extract::point_projection_defaults();
            const auto a = eval::complete(*model, input_tensor(scan::read_observation(co_a), model->cfg.n_input_points, g.seed),
                                          n, g.seed, proj);
            const auto b = eval::complete(*model, input_tensor(scan::read_observation(co_b), model->cfg.n_input_points, g.seed),
                                          n, mix_seed(g.seed, 1), proj);
            const auto m = extract::correspondences(model->inr, a.completed, a.code, b.completed, b.code);
            write_csv_correspondences(dir / "correspondences.csv", a.completed.points, m.points);
            scan::write_ply(dir / "source.ply", a.completed.points);
            scan::write_ply(dir / "target.ply", b.completed.points);
            out << "correspondences " << m.size() << "\n";
            return kOk;
        }

        if (s_rep->parsed()) {
            std::vector<eval::MetricsRecord> recs;
            for (const auto& r : rp_runs) recs.push_back(eval::record_from_json(train::read_json_file(fs::path(r) / "metrics.json")));
            const fs::path dir = g.out.value_or("report");
            write_resolved(dir, "report", g, {{"runs", rp_runs}});
            std::string csv = "run,mode,seed";
            std::string md = "| run | mode |";
            for (const auto& c : eval::MetricsRecord::columns()) csv += "," + c, md += " " + c + " |";
            csv += ",rows,skipped\n";
            md += "\n|---|---|";
            for (std::size_t k = 0; k < eval::MetricsRecord::columns().size(); ++k) md += "---|";
            md += "\n";
            for (std::size_t i = 0; i < recs.size(); ++i) {
                csv += rp_runs[i] + "," + recs[i].mode + "," + std::to_string(recs[i].seed);
                md += "| " + rp_runs[i] + " | " + recs[i].mode + " |";
                for (const auto& c : eval::MetricsRecord::columns()) {
                    const auto m = recs[i].mean(c);
                    csv += "," + (m ? train::format_double(*m) : "");
                    md += " " + (m ? selftest::fmt(*m) : "n/a") + " |";
                }
                csv += "," + std::to_string(recs[i].rows.size()) + "," + std::to_string(recs[i].skipped_count()) + "\n";
                md += "\n";
            }
            eval::write_text(dir / "comparison.csv", csv);
            eval::write_text(dir / "comparison.md", md);
            out << md;
            return kOk;
        }

        if (s_self->parsed()) {
            std::string failed;
            auto note = [&](const std::string& f) {
                if (failed.empty()) failed = f;
            };
            note(print_checks(out, "grad", selftest::gradient_checks(g.seed)));
            note(print_checks(out, "metric", selftest::geometry_checks(g.seed)));
            note(print_checks(out, "involution", selftest::involution_checks(g.seed)));
            note(print_checks(out, "extraction", selftest::extraction_checks(128, g.threads)));
            if (st_full) {
                const fs::path dir = g.out.value_or((fs::temp_directory_path() / "ivc_selftest").string());
                const auto smoke = selftest::pipeline_smoke(dir / "work", g.seed, g.threads);
                note(print_checks(out, "pipeline", smoke.checks));
                write_resolved(dir, "selftest", g, {{"full", true}, {"work", (dir / "work").string()}});
                out << "summary hash " << smoke.hash << " (" << selftest::fmt(smoke.seconds) << " s)\n";
            } else if (g.out) {
                write_resolved(*g.out, "selftest", g, {{"full", false}});
            }
            if (!failed.empty()) {
                err << "selftest failed: " << failed << "\n";
                return kRuntime;
            }
            out << "selftest passed\n";
            return kOk;
        }
    } catch (const std::invalid_argument& e) {  // ConfigError, ContractError, DimensionError
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kValidation;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<const char*> argv{"ivc"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ivc::cli
