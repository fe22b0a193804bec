#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ivc/autodiff/grad_check.hpp"
#include "ivc/completion/losses.hpp"
#include "ivc/evalharness/evaluate.hpp"
#include "ivc/selftest/oracles.hpp"
#include "ivc/templateinr/losses.hpp"

namespace ivc::selftest {

using ad::Tensor;
using json = nlohmann::json;

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

inline bool all_passed(const std::vector<Check>& checks) {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// 64-bit FNV-1a, stable across platforms.
inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Gradients

/// Every parameter group of this network stays under 1k parameters.
inline NetworkConfig grad_check_network() {
    NetworkConfig n;
    n.code_dim = 4;
    n.enc_point_dims = {8, 8};
    n.enc_head_hidden = 8;
    n.gen_hidden = 8;
    n.n_seeds = 8;
    n.n_coarse = 16;
    n.up_ratio = 2;
    n.up_hidden = {8};
    n.warp_width = 8;
    n.warp_layers = 2;
    n.udf_width = 8;
    n.udf_layers = 3;
    return n;
}

inline Tensor random_cloud(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n * 3);
    for (auto& x : v) x = u(rng);
    return Tensor({n, 3}, std::move(v));
}

/// Adds N(0, sigma) to every parameter, biases included, so that no unit
/// sits exactly on a ReLU kink the way zero-initialized biases can.
inline void jitter(ad::ParamSet& ps, std::mt19937_64& rng, double sigma = 0.1) {
    std::normal_distribution<double> g(0.0, sigma);
    for (auto& e : ps.entries())
        for (auto& v : e.value.mutable_data()) v += g(rng);
}

/// Input and parameter gradients of every training loss against central
/// differences (step 1e-6, so a ReLU kink is straddled far less often), on
/// random tiny networks and at most 32 points.
inline std::vector<Check> gradient_checks(std::uint64_t seed, double tol = 1e-4, double h = 1e-6) {
    const NetworkConfig cfg = grad_check_network();
    completion::CompletionNet cnet(cfg, mix_seed(seed, 1));
    inr::TemplateNet tnet(cfg, mix_seed(seed, 2));
    std::mt19937_64 rng(mix_seed(seed, 3));
    for (auto* ps : {&cnet.theta_g(), &cnet.theta_u(), &tnet.theta_t()}) jitter(*ps, rng);
    const Tensor xp = random_cloud(rng, 12);
    const Tensor templ = random_cloud(rng, 16);
    const Tensor code4 = Tensor::matrix(1, cfg.code_dim, {0.3, -0.2, 0.1, 0.4});
    const Tensor pts = random_cloud(rng, 20);
    const completion::WarpFn warp = [&tnet](const Tensor& x, const Tensor& c) { return tnet.warp(x, c); };

    std::vector<Check> out;
    auto record = [&](const std::string& name, double err, std::size_t params) {
        std::string d = "max rel err " + fmt(err);
        if (params) d += ", " + std::to_string(params) + " params";
        out.push_back({name, err < tol && params <= 1000, d});
    };
    auto guarded = [&](const std::string& name, const std::function<double()>& f, std::size_t params) {
        try {
            record(name, f(), params);
        } catch (const std::exception& e) {
            out.push_back({name, false, e.what()});
        }
    };

    auto& tg = cnet.theta_g();
    auto& tu = cnet.theta_u();
    auto& tt = tnet.theta_t();

    guarded("L_invo / input", [&] { return ad::grad_check([&](const Tensor& x) { return completion::loss_invo(cnet, x); }, xp, h); }, 0);
    guarded("L_invo / theta_G",
            [&] { return ad::grad_check_params([&] { return completion::loss_invo(cnet, xp); }, tg, h); },
            tg.parameter_count());

    // X_c as the union of input and generated points; no sampling in the graph.
    auto l_g = [&](const Tensor& x) {
        const Tensor xc = ad::concat_rows(x, cnet.generate_missing(x));
        return completion::loss_template_g(xc, cnet.encode(xc), templ, warp);
    };
    guarded("L_G / input", [&] { return ad::grad_check(l_g, xp, h); }, 0);
    guarded("L_G / theta_G", [&] { return ad::grad_check_params([&] { return l_g(xp); }, tg, h); }, tg.parameter_count());

    const Tensor parents = random_cloud(rng, 10);
    auto l_u = [&](const Tensor& p) {
        const Tensor x = cnet.upsample(p, code4);
        return completion::loss_template_u(x, cnet.encode(x), templ, warp);
    };
    guarded("L_U / input", [&] { return ad::grad_check(l_u, parents, h); }, 0);
    guarded("L_U / theta_U", [&] { return ad::grad_check_params([&] { return l_u(parents); }, tu, h); }, tu.parameter_count());

    guarded("L_part / input",
            [&] { return ad::grad_check([&](const Tensor& p) { return completion::loss_part(p, cnet.upsample(p, code4)); }, parents, h); },
            0);
    guarded("L_part / theta_U",
            [&] { return ad::grad_check_params([&] { return completion::loss_part(parents, cnet.upsample(parents, code4)); }, tu, h); },
            tu.parameter_count());

    std::uniform_real_distribution<double> ud(0.0, 0.2);
    std::vector<double> targets(pts.rows());
    for (auto& t : targets) t = ud(rng);
    guarded("L_T / input",
            [&] { return ad::grad_check([&](const Tensor& x) { return inr::loss_t(tnet, x, targets, code4, 0.1); }, pts, h); }, 0);
    guarded("L_T / theta_T",
            [&] { return ad::grad_check_params([&] { return inr::loss_t(tnet, pts, targets, code4, 0.1); }, tt, h); },
            tt.parameter_count());

    guarded("L_pw / input",
            [&] { return ad::grad_check([&](const Tensor& x) { return inr::loss_pw(tnet, x, code4, 0.25, inr::Reduction::mean); }, pts, h); },
            0);
    guarded("L_pw / theta_T",
            [&] { return ad::grad_check_params([&] { return inr::loss_pw(tnet, pts, code4, 0.25, inr::Reduction::mean); }, tt, h); },
            tt.parameter_count());

    const auto pairs = inr::sample_pairs(pts.rows(), 24, rng);
    guarded("L_pp / input",
            [&] {
                return ad::grad_check([&](const Tensor& x) { return inr::loss_pp(tnet, x, code4, pairs, inr::Reduction::mean); }, pts, h);
            },
            0);
    guarded("L_pp / theta_T",
            [&] { return ad::grad_check_params([&] { return inr::loss_pp(tnet, pts, code4, pairs, inr::Reduction::mean); }, tt, h); },
            tt.parameter_count());
    return out;
}

// ---------------------------------------------------------------------------
// Metrics against brute force

inline std::vector<Vec3> to_vec3(const std::vector<oracle::P3>& v) {
    std::vector<Vec3> out;
    out.reserve(v.size());
    for (const auto& p : v) out.emplace_back(p[0], p[1], p[2]);
    return out;
}

/// Chamfer, F1, FPS, MMD and Fidelity on random instances of up to 50 points.
inline std::vector<Check> geometry_checks(std::uint64_t seed, std::size_t instances = 100, double tol = 1e-9) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    double e_bi = 0, e_single = 0, e_f1 = 0, e_mmd = 0, e_fid = 0;
    bool fps_ok = true, f1_self = true;
    for (std::size_t i = 0; i < instances; ++i) {
        const auto a = oracle::random_points(rng, size(rng));
        const auto b = oracle::random_points(rng, size(rng));
        const geo::PointSet pa(to_vec3(a)), pb(to_vec3(b));
        e_bi = std::max(e_bi, std::abs(geo::chamfer_bi(pa, pb) - oracle::chamfer_bi(a, b)));
        e_single = std::max(e_single, std::abs(geo::chamfer_single(pa, pb) - oracle::chamfer_single(a, b)));
        for (double tau : {0.03, 0.3, 0.8})
            e_f1 = std::max(e_f1, std::abs(geo::f1_score(pa, pb, tau) - oracle::f1(a, b, tau)));
        e_fid = std::max(e_fid, std::abs(eval::eval_fidelity(pa, pb) - oracle::chamfer_single(a, b)));
        std::vector<std::vector<oracle::P3>> refs;
        std::vector<geo::PointSet> corpus;
        for (int r = 0; r < 4; ++r) {
            refs.push_back(oracle::random_points(rng, size(rng)));
            corpus.emplace_back(to_vec3(refs.back()));
        }
        e_mmd = std::max(e_mmd, std::abs(eval::eval_mmd(pa, corpus) - oracle::mmd(a, refs)));
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, a.size())(rng);
        const std::size_t s0 = std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng);
        const auto order = geo::fps_indices(pa.points, k, s0);
        fps_ok = fps_ok && order.size() == k && order.front() == s0 && oracle::fps_is_greedy(a, order);
        f1_self = f1_self && geo::f1_score(pa, pa, eval::kF1Tau) == 100.0;
    }
    const std::string n = " (" + std::to_string(instances) + " instances)";
    return {
        {"chamfer_bi", e_bi <= tol, "max abs diff " + fmt(e_bi) + n},
        {"chamfer_single", e_single <= tol, "max abs diff " + fmt(e_single) + n},
        {"f1_score", e_f1 <= tol, "max abs diff " + fmt(e_f1) + n},
        {"fps", fps_ok, fps_ok ? "greedy max-min order" + n : "order is not greedy"},
        {"mmd", e_mmd <= tol, "max abs diff " + fmt(e_mmd) + n},
        {"fidelity", e_fid <= tol, "max abs diff " + fmt(e_fid) + n},
        {"f1 of identical sets", f1_self, f1_self ? "exactly 100" : "not exactly 100"},
    };
}

// ---------------------------------------------------------------------------
// Involution

/// A completion table on a two-part partition {A, B} maps each half to the
/// other, so G(G(A)) = A exactly; the identity is a trivial fixed point too.
inline std::vector<Check> involution_checks(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Tensor a = random_cloud(rng, 16, -1.0, 0.0);
    const Tensor b = random_cloud(rng, 16, 0.0, 1.0);
    const completion::PointFn table = [&](const Tensor& p) {
        if (p.data() == a.data()) return b;
        if (p.data() == b.data()) return a;
        throw ContractError("completion table: unknown part");
    };
    const completion::PointFn identity = [](const Tensor& p) { return p; };
    const double la = completion::loss_invo(table, a).item();
    const double lb = completion::loss_invo(table, b).item();
    const double li = completion::loss_invo(identity, a).item();
    return {
        {"oracle table", std::abs(la) <= 1e-12 && std::abs(lb) <= 1e-12, "L_invo " + fmt(la) + " / " + fmt(lb)},
        {"identity", std::abs(li) <= 1e-12, "L_invo " + fmt(li)},
    };
}

// ---------------------------------------------------------------------------
// Extraction

inline inr::FieldFn sphere_udf(double r) {
    return [r](const Tensor& x) {
        return ad::abs(ad::add(ad::row_norm(x), ad::broadcast_rows(Tensor::scalar(-r), x.rows())));
    };
}

/// Projection and marching cubes on the exact UDF of a radius-0.5 sphere.
inline std::vector<Check> extraction_checks(std::size_t resolution = 128, std::size_t threads = 1) {
    std::vector<Check> out;
    const auto pts = extract::project_points(sphere_udf(0.5), 1024, 3);
    double err = 0.0;
    for (const auto& p : pts.points) err = std::max(err, std::abs(p.norm() - 0.5));
    out.push_back({"projection radial error", !pts.empty() && err < 1e-3,
                   "max " + fmt(err) + " over " + std::to_string(pts.size()) + " points"});
    const double eps = 0.01;
    const auto grid = extract::evaluate_grid(sphere_udf(0.5), resolution, threads);
    const auto mc = extract::mc_mesh(grid, eps);
    double mc_err = 0.0;
    for (const auto& v : mc.mesh.vertices)
        mc_err = std::max(mc_err, std::min(std::abs(v.norm() - (0.5 - eps)), std::abs(v.norm() - (0.5 + eps))));
    const double h = grid.spacing();
    out.push_back({"marching cubes radial error", !mc.empty && mc_err < 2 * h,
                   "max " + fmt(mc_err) + " vs 2 cells = " + fmt(2 * h) + " at resolution " + std::to_string(resolution)});
    return out;
}

// ---------------------------------------------------------------------------
// Dataset soundness

/// Rechecks a generated primitive corpus against brute force: stored UDF
/// distances against every triangle of the visible surface, each stored
/// surface point against an occlusion test over all triangles, and split
/// disjointness.
inline std::vector<Check> dataset_checks(const std::filesystem::path& root, double tol = 1e-6) {
    const auto manifest = scan::load_manifest(root);
    double udf_err = 0.0;
    std::size_t udf_n = 0, surf_n = 0, occluded = 0;
    bool disjoint = true, have_all = true;
    for (const auto& e : manifest.instances) {
        for (auto v : e.train_views)
            if (std::find(e.test_views.begin(), e.test_views.end(), v) != e.test_views.end()) disjoint = false;
        const auto shape = manifest.primitive(e);
        if (!shape) {
            have_all = false;
            continue;
        }
        const auto& m = shape->mesh;
        std::vector<std::array<oracle::P3, 3>> tri(m.triangles.size());
        for (std::size_t t = 0; t < tri.size(); ++t)
            for (int k = 0; k < 3; ++k) {
                const Vec3 c = m.corner(t, k);
                tri[t][static_cast<std::size_t>(k)] = {c.x(), c.y(), c.z()};
            }
        for (auto v : e.views_available) {
            const auto obs = scan::read_observation(root / scan::DatasetManifest::observation_name(e.id, v));
            const oracle::P3 cam{obs.camera_pos.x(), obs.camera_pos.y(), obs.camera_pos.z()};
            std::vector<std::uint32_t> visible;
            for (const auto& sp : obs.surface_points.points) {
                const oracle::P3 p{sp.x(), sp.y(), sp.z()};
                std::size_t own = 0;
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t t = 0; t < tri.size(); ++t) {
                    const double d = oracle::point_triangle_distance(p, tri[t][0], tri[t][1], tri[t][2]);
                    if (d < best) best = d, own = t;
                }
                visible.push_back(static_cast<std::uint32_t>(own));
                oracle::P3 dir{cam[0] - p[0], cam[1] - p[1], cam[2] - p[2]};
                const double len = std::sqrt(oracle::sq(cam, p));
                for (auto& c : dir) c /= len;
                bool blocked = false;
                for (std::size_t t = 0; t < tri.size() && !blocked; ++t)
                    if (t != own) blocked = oracle::segment_triangle_hit(p, dir, tri[t][0], tri[t][1], tri[t][2], 1e-9, len) >= 0.0;
                const Vec3 n = m.normal(own);
                const bool facing = n.x() * dir[0] + n.y() * dir[1] + n.z() * dir[2] > 0.0;
                occluded += blocked || !facing || best > 1e-9;
                ++surf_n;
            }
            std::sort(visible.begin(), visible.end());
            visible.erase(std::unique(visible.begin(), visible.end()), visible.end());
            for (const auto& s : obs.udf_samples) {
                const oracle::P3 p{s.position.x(), s.position.y(), s.position.z()};
                double best = std::numeric_limits<double>::infinity();
                for (auto t : visible) best = std::min(best, oracle::point_triangle_distance(p, tri[t][0], tri[t][1], tri[t][2]));
                udf_err = std::max(udf_err, std::abs(best - s.distance));
                ++udf_n;
            }
        }
    }
    return {
        {"udf distances", have_all && udf_n > 0 && udf_err <= tol,
         std::to_string(udf_n) + " samples, max abs diff " + fmt(udf_err)},
        {"surface visibility", have_all && surf_n > 0 && occluded == 0,
         std::to_string(occluded) + " of " + std::to_string(surf_n) + " surface points fail the recheck"},
        {"train/test views disjoint", disjoint, disjoint ? "no shared view" : "a view is in both splits"},
    };
}

// ---------------------------------------------------------------------------
// End-to-end smoke run

struct SmokeResult {
    std::vector<Check> checks;
    std::string hash;  // over the loss log and metrics.csv
    double seconds = 0.0;
};

inline NetworkConfig smoke_network() {
    NetworkConfig n;
    n.code_dim = 16;
    n.enc_point_dims = {32, 32};
    n.enc_head_hidden = 32;
    n.gen_hidden = 32;
    n.n_seeds = 32;
    n.n_coarse = 96;
    n.up_ratio = 2;
    n.up_hidden = {32};
    n.warp_width = 32;
    n.warp_layers = 2;
    n.udf_width = 32;
    n.udf_layers = 3;
    return n;
}

inline train::TrainConfig smoke_train_config(const std::filesystem::path& dataset, std::uint64_t seed) {
    train::TrainConfig c;
    c.dataset = dataset.string();
    c.seed = seed;
    c.network = smoke_network();
    c.batch_size = 4;
    c.max_iterations = 200;
    c.warmup_iterations = 50;
    c.template_refresh = 50;
    c.template_points = 256;
    c.template_extraction.n_candidates = 1024;
    c.n_input_points = 256;
    c.n_udf_samples = 256;
    c.checkpoint_every = 0;
    return c;
}

inline std::vector<std::vector<double>> snapshot(const ad::ParamSet& ps) {
    std::vector<std::vector<double>> out;
    for (const auto& e : ps.entries()) out.push_back(e.value.data());
    return out;
}

/// 10-instance corpus, 200 training iterations, evaluation, and the
/// invariants that tie them together. Everything is written under `work`.
inline SmokeResult pipeline_smoke(const std::filesystem::path& work, std::uint64_t seed, std::size_t threads = 1) {
    const auto t0 = std::chrono::steady_clock::now();
    SmokeResult res;
    auto& out = res.checks;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) { out.push_back({name, ok, detail}); };
    std::filesystem::remove_all(work);
    const auto data_root = work / "data";

    scan::DatasetConfig dc;
    dc.corpus = "smoke";
    dc.views = 6;
    dc.train_views = 4;
    dc.test_views = 2;
    dc.n_surface = 512;
    dc.gt_points = 1024;
    dc.udf.n_near = 400;
    dc.udf.n_uniform = 100;
    dc.seed = seed;
    dc.threads = threads;
    scan::build_dataset(scan::primitive_instances(10, scan::Family::box, seed), dc, data_root);
    for (auto& c : dataset_checks(data_root)) out.push_back({"dataset: " + c.name, c.passed, c.detail});

    // A file with a broken magic must be rejected by name.
    {
        const auto manifest = scan::load_manifest(data_root);
        const auto& e = manifest.instances.front();
        const auto bad = work / "corrupt.pudf";
        std::filesystem::copy_file(data_root / scan::DatasetManifest::observation_name(e.id, e.views_available.front()), bad);
        {
            std::fstream f(bad, std::ios::in | std::ios::out | std::ios::binary);
            f.write("XXXX", 4);
        }
        std::string msg;
        try {
            scan::read_observation(bad);
        } catch (const IoError& ex) {
            msg = ex.what();
        }
        check("corrupt observation rejected", msg.find(bad.string()) != std::string::npos,
              msg.empty() ? "no error raised" : msg);
    }

    const auto cfg = smoke_train_config(data_root, seed);
    auto data = std::make_shared<const train::SplitData>(train::load_split(data_root, scan::Split::train, true));
    const auto run_dir = work / "train";
    std::filesystem::create_directories(run_dir);
    train::Trainer t(cfg, data);
    std::size_t per_phase[2] = {0, 0};
    bool frozen_ok = true, finite = true;
    std::string frozen_msg = "frozen sets unchanged in every step";
    {
        train::LossLog log(run_dir / "loss_log.csv", false);
        while (t.iteration() < t.total_iterations()) {
            if (t.iteration() == 100) t.save(run_dir / "mid");
            const auto phase = t.phase_at(t.iteration());
            auto& m = t.model();
            std::vector<ad::ParamSet*> frozen;
            if (phase == train::Phase::inr)
                frozen = {&m.completion.theta_g(), &m.completion.theta_u()};
            else
                frozen = {&m.inr.theta_t()};
            std::vector<std::vector<std::vector<double>>> before;
            for (auto* s : frozen) before.push_back(snapshot(*s));
            const auto rec = t.step();
            for (std::size_t k = 0; k < frozen.size(); ++k)
                if (snapshot(*frozen[k]) != before[k] && frozen_ok) {
                    frozen_ok = false;
                    frozen_msg = frozen[k]->name() + " changed at iteration " + std::to_string(rec.iteration);
                }
            ++per_phase[rec.phase == train::Phase::inr ? 0 : 1];
            for (const auto& v : {rec.l_t, rec.l_pw, rec.l_pp, rec.l_g, rec.l_u, rec.l_invo, rec.l_part})
                if (v && !std::isfinite(*v)) finite = false;
            log.write(rec);
        }
        log.flush();
    }
    t.save(run_dir / "checkpoint");
    check("phase counts", per_phase[0] == 100 && per_phase[1] == 100,
          std::to_string(per_phase[0]) + " INR / " + std::to_string(per_phase[1]) + " COMPLETION");
    check("frozen sets", frozen_ok, frozen_msg);
    check("finite losses", finite, finite ? "all recorded losses finite" : "non-finite loss recorded");
    check("template refreshes", t.template_refreshes() >= 3, std::to_string(t.template_refreshes()) + " refreshes");

    // Resuming from iteration 100 reproduces the next steps exactly.
    {
        train::Trainer r(cfg, data);
        r.load(run_dir / "mid");
        bool same = r.iteration() == 100;
        for (std::size_t k = 0; k < 10 && same; ++k)
            same = train::to_csv_row(r.step()) == train::to_csv_row(t.history()[100 + k]);
        check("resume", same, same ? "iterations 100-109 reproduced bit-exactly" : "resumed steps differ");
    }

    auto model = train::load_model(run_dir / "checkpoint");
    const auto test = train::load_split(data_root, scan::Split::test, true);
    eval::EvalConfig ec;
    ec.threads = threads;
    ec.seed = seed;
    ec.projection.n_candidates = 2048;
    ec.projection.level_tol = 0.05;
    const auto rec = eval::evaluate(*model, test, eval::reference_corpus(*data), ec, "checkpoint");
    eval::emit_report(rec, work / "eval", run_dir / "loss_log.csv");
    check("eval rows", rec.rows.size() == test.observations.size(),
          std::to_string(rec.rows.size()) + " rows for " + std::to_string(test.observations.size()) + " observations");
    bool ranges = true;
    std::size_t scored = 0;
    for (const auto& r : rec.rows) {
        if (!r.skipped.empty()) continue;
        ++scored;
        ranges = ranges && r.f1 && *r.f1 >= 0.0 && *r.f1 <= 100.0 && r.cd && std::isfinite(*r.cd) && *r.cd >= 0.0 &&
                 r.fidelity && *r.fidelity >= 0.0 && r.mmd && *r.mmd >= 0.0;
    }
    check("eval metrics", scored > 0 && ranges,
          std::to_string(scored) + " scored rows, " + std::to_string(rec.skipped_count()) + " skipped");
    const auto reread = eval::record_from_json(json::parse(read_bytes(work / "eval" / "metrics.json")));
    bool agg = reread.rows.size() == rec.rows.size();
    for (const auto& c : eval::MetricsRecord::columns()) agg = agg && reread.mean(c) == rec.mean(c);
    check("report round trip", agg, agg ? "metrics.json matches the in-memory record" : "metrics.json differs");

    res.hash = hex64(fnv1a(read_bytes(work / "eval" / "metrics.csv"), fnv1a(read_bytes(run_dir / "loss_log.csv"))));
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace ivc::selftest
