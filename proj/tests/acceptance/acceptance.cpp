// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance <work-dir> [criteria...], e.g.
// `acceptance /tmp/acc 1 2 3` runs only the first three.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "ivc/cli/cli.hpp"
#include "ivc/selftest/checks.hpp"

using namespace ivc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kSeed = 7;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool passed = false;
    std::string detail;
};

void print_details(const std::vector<selftest::Check>& checks) {
    for (const auto& c : checks) std::cout << "    " << (c.passed ? "ok   " : "FAIL ") << c.name << ": " << c.detail << "\n";
}

// ---------------------------------------------------------------------------
// Primitive corpus runs shared by criteria 5, 6, 7 and 10.

/// Desk-scale configuration used for the ablation runs; sized so the four
/// runs plus evaluation fit a CPU budget.
train::TrainConfig ablation_config(const fs::path& dataset, train::Mode mode) {
    auto c = train::TrainConfig::desk();
    c.dataset = dataset.string();
    c.mode = mode;
    c.seed = kSeed;
    c.max_iterations = 5000;
    c.batch_size = 8;
    c.checkpoint_every = 0;
    c.network.code_dim = 64;
    c.network.enc_point_dims = {32, 64};
    c.network.enc_head_hidden = 64;
    c.network.gen_hidden = 128;
    c.network.up_hidden = {64, 32};
    c.network.warp_width = 64;
    c.network.warp_layers = 3;
    c.network.udf_width = 64;
    c.n_input_points = 256;
    c.n_udf_samples = 512;
    return c;
}

struct ModeRun {
    train::Mode mode;
    std::optional<double> cd, corr;
    std::size_t skipped = 0;
    double train_seconds = 0, eval_seconds = 0;
    // Alternation / freeze bookkeeping.
    std::vector<train::Phase> phases;
    std::string freeze_violation;
    std::string error;
};

/// Which parameter groups a phase must leave untouched.
std::vector<std::size_t> frozen_groups(train::Mode mode, train::Phase phase) {
    // 0 = theta_G, 1 = theta_U, 2 = theta_T
    if (phase == train::Phase::completion) return {2};
    if (mode == train::Mode::inr_only) return {1};
    return {0, 1};
}

std::vector<std::vector<double>> flat(const ad::ParamSet& ps) {
    std::vector<std::vector<double>> out;
    for (const auto& e : ps.entries()) out.push_back(e.value.data());
    return out;
}

void run_mode(ModeRun& r, const fs::path& dataset, const fs::path& dir, std::size_t eval_threads) {
    try {
        const auto cfg = ablation_config(dataset, r.mode);
        auto data = std::make_shared<const train::SplitData>(
            train::load_split(dataset, scan::Split::train, r.mode == train::Mode::supervised));
        fs::create_directories(dir);
        auto t0 = Clock::now();
        train::Trainer t(cfg, data);
        {
            train::LossLog log(dir / "loss_log.csv", false);
            while (t.iteration() < t.total_iterations()) {
                const auto phase = t.phase_at(t.iteration());
                const auto sets = t.model().sets();
                const auto frozen = frozen_groups(r.mode, phase);
                std::vector<std::vector<std::vector<double>>> before;
                for (auto k : frozen) before.push_back(flat(*sets[k]));
                const auto rec = t.step();
                for (std::size_t k = 0; k < frozen.size(); ++k)
                    if (r.freeze_violation.empty() && flat(*sets[frozen[k]]) != before[k])
                        r.freeze_violation = sets[frozen[k]]->name() + " changed in " + train::to_string(rec.phase) +
                                             " step " + std::to_string(rec.iteration);
                r.phases.push_back(rec.phase);
                log.write(rec);
            }
        }
        t.save(dir / "checkpoint");
        r.train_seconds = since(t0);

        t0 = Clock::now();
        auto model = train::load_model(dir / "checkpoint");
        const auto test = train::load_split(dataset, scan::Split::test, true);
        eval::EvalConfig ec;
        ec.threads = eval_threads;
        ec.seed = kSeed;
        ec.projection.n_candidates = 2048;
        const auto rec = eval::evaluate(*model, test, eval::reference_corpus(*data), ec, "checkpoint");
        eval::emit_report(rec, dir / "eval", dir / "loss_log.csv");
        r.cd = rec.mean("cd");
        r.corr = rec.mean("corr_l2");
        r.skipped = rec.skipped_count();
        r.eval_seconds = since(t0);
    } catch (const std::exception& e) {
        r.error = e.what();
    }
}

struct Ablation {
    std::map<train::Mode, ModeRun> runs;
    double seconds = 0;
    std::size_t workers = 1;
    std::string error;
};

/// 50-instance box corpus (6 train + 2 test views), four modes trained with
/// the same seed, run concurrently when cores allow.
Ablation run_ablation(const fs::path& work) {
    Ablation a;
    const auto t0 = Clock::now();
    const auto dataset = work / "primitives";
    const std::size_t cores = std::max(1u, std::thread::hardware_concurrency());
    try {
        fs::remove_all(dataset);
        scan::DatasetConfig dc;
        dc.corpus = "box";
        dc.views = 8;
        dc.train_views = 6;
        dc.test_views = 2;
        dc.seed = kSeed;
        dc.threads = cores;
        scan::build_dataset(scan::primitive_instances(50, scan::Family::box, kSeed), dc, dataset);
    } catch (const std::exception& e) {
        a.error = std::string("corpus generation failed: ") + e.what();
        return a;
    }
    const std::vector<train::Mode> modes{train::Mode::full, train::Mode::no_invo, train::Mode::inr_only,
                                         train::Mode::supervised};
    for (auto m : modes) a.runs[m].mode = m;
    a.workers = std::min(cores, modes.size());
    const std::size_t eval_threads = std::max<std::size_t>(1, cores / a.workers);
    std::vector<ModeRun*> queue;
    for (auto m : modes) queue.push_back(&a.runs[m]);
    parallel_for(queue.size(), a.workers, [&](std::size_t i) {
        run_mode(*queue[i], dataset, work / ("run_" + train::to_string(queue[i]->mode)), eval_threads);
    });
    a.seconds = since(t0);
    for (const auto& [m, r] : a.runs) {
        std::cout << "    " << train::to_string(m) << ": ";
        if (!r.error.empty()) {
            std::cout << "error: " << r.error << "\n";
            continue;
        }
        std::cout << "CD " << (r.cd ? selftest::fmt(*r.cd) : "n/a") << ", Corr_l2 "
                  << (r.corr ? selftest::fmt(*r.corr) : "n/a") << ", skipped " << r.skipped << ", train "
                  << selftest::fmt(r.train_seconds) << " s, eval " << selftest::fmt(r.eval_seconds) << " s\n";
    }
    std::cout << "    ablation wall time " << selftest::fmt(a.seconds / 60.0) << " min on " << cores << " core(s), "
              << a.workers << " concurrent run(s)\n";
    return a;
}

bool usable(const ModeRun& r) { return r.error.empty() && r.cd.has_value(); }

// ---------------------------------------------------------------------------

Outcome criterion1() {
    const auto t0 = Clock::now();
    const auto checks = selftest::gradient_checks(kSeed);
    const double s = since(t0);
    print_details(checks);
    return {selftest::all_passed(checks) && s < 60.0,
            std::to_string(checks.size()) + " input/parameter checks, " + selftest::fmt(s) + " s"};
}

Outcome criterion2() {
    auto checks = selftest::geometry_checks(kSeed, 100);
    print_details(checks);
    return {selftest::all_passed(checks), "100 random instances of 1-50 points, tolerance 1e-9"};
}

Outcome criterion3() {
    const auto checks = selftest::involution_checks(kSeed);
    print_details(checks);
    return {selftest::all_passed(checks), "oracle table and identity both give L_invo = 0"};
}

Outcome criterion4(const fs::path& work) {
    const auto root = work / "box10";
    fs::remove_all(root);
    scan::DatasetConfig dc;
    dc.corpus = "box";
    dc.views = 8;
    dc.train_views = 6;
    dc.test_views = 2;
    dc.n_surface = 1024;
    dc.udf.n_near = 800;
    dc.udf.n_uniform = 200;
    dc.seed = kSeed;
    dc.threads = std::max(1u, std::thread::hardware_concurrency());
    scan::build_dataset(scan::primitive_instances(10, scan::Family::box, kSeed), dc, root);
    const auto checks = selftest::dataset_checks(root);
    print_details(checks);
    return {selftest::all_passed(checks), "10-instance box corpus, 8 views each"};
}

Outcome criterion5(const Ablation& a) {
    if (!a.error.empty()) return {false, a.error};
    const auto& full = a.runs.at(train::Mode::full);
    const auto& no_invo = a.runs.at(train::Mode::no_invo);
    const auto& inr_only = a.runs.at(train::Mode::inr_only);
    if (!usable(full) || !usable(no_invo) || !usable(inr_only)) return {false, "a run failed or produced no CD"};
    const bool margin = *full.cd <= 0.8 * *no_invo.cd && *full.cd <= 0.8 * *inr_only.cd;
    const std::size_t cores = std::max(1u, std::thread::hardware_concurrency());
    const double minutes = a.seconds / 60.0;
    std::string detail = "CD full " + selftest::fmt(*full.cd) + " vs no_invo " + selftest::fmt(*no_invo.cd) + " and inr_only " +
                         selftest::fmt(*inr_only.cd) + " (need <= 0.8x each); runtime " + selftest::fmt(minutes) + " min";
    // The 45-minute bound is stated for 8 cores; with fewer it cannot be checked here.
    bool time_ok = true;
    if (cores >= 8) {
        time_ok = minutes < 45.0;
        detail += " (bound 45 min)";
    } else {
        detail += " on " + std::to_string(cores) + " core(s); 8-core bound not checkable";
    }
    return {margin && time_ok, detail};
}

Outcome criterion6(const Ablation& a) {
    if (!a.error.empty()) return {false, a.error};
    const auto& full = a.runs.at(train::Mode::full);
    const auto& sup = a.runs.at(train::Mode::supervised);
    if (!usable(full) || !usable(sup)) return {false, "a run failed or produced no CD"};
    return {*sup.cd <= *full.cd, "CD supervised " + selftest::fmt(*sup.cd) + " vs full " + selftest::fmt(*full.cd)};
}

Outcome criterion7(const Ablation& a) {
    if (!a.error.empty()) return {false, a.error};
    std::string problem;
    std::size_t windows = 0;
    for (const auto& [m, r] : a.runs) {
        if (!r.error.empty()) {
            problem = train::to_string(m) + ": " + r.error;
            break;
        }
        if (!r.freeze_violation.empty()) {
            problem = train::to_string(m) + ": " + r.freeze_violation;
            break;
        }
        if (m == train::Mode::inr_only) continue;  // a single phase by design
        if (r.phases.size() < 200) {
            problem = train::to_string(m) + ": fewer than 200 steps";
            break;
        }
        std::size_t inr = 0;
        for (std::size_t i = 0; i < r.phases.size(); ++i) {
            inr += r.phases[i] == train::Phase::inr;
            if (i >= 200) inr -= r.phases[i - 200] == train::Phase::inr;
            if (i + 1 >= 200) {
                ++windows;
                if (inr != 100 && problem.empty())
                    problem = train::to_string(m) + ": window ending at step " + std::to_string(i) + " has " +
                              std::to_string(inr) + " INR steps";
            }
        }
    }
    if (!problem.empty()) return {false, problem};
    return {true, std::to_string(windows) + " windows of 200 steps with 100 per phase; frozen groups bit-identical in all " +
                      std::to_string(a.runs.size()) + " runs"};
}

Outcome criterion8() {
    const auto checks = selftest::extraction_checks(128, std::max(1u, std::thread::hardware_concurrency()));
    print_details(checks);
    return {selftest::all_passed(checks), "sphere radius 0.5, resolution 128"};
}

Outcome criterion9(const fs::path& work) {
    // Two CLI training runs with the same config and seed.
    const auto data = work / "box10";
    auto cfg = selftest::smoke_train_config(data, kSeed);
    cfg.max_iterations = 60;
    cfg.warmup_iterations = 20;
    cfg.template_refresh = 20;
    train::write_json_file(work / "det.json", train::to_json(cfg));
    std::vector<std::string> logs;
    for (const char* name : {"det_a", "det_b"}) {
        std::ostringstream o, e;
        const int code = cli::run({"train", "--config", (work / "det.json").string(), "--out", (work / name).string()}, o, e);
        if (code != 0) return {false, std::string("train exited ") + std::to_string(code) + ": " + e.str()};
        logs.push_back(selftest::read_bytes(work / name / "loss_log.csv"));
    }
    const bool same = logs[0] == logs[1] && !logs[0].empty();
    const auto t0 = Clock::now();
    std::ostringstream o, e;
    const int code = cli::run({"selftest", "--full", "--seed", std::to_string(kSeed), "--out", (work / "selftest").string()}, o, e);
    const double s = since(t0);
    std::istringstream lines(o.str());
    for (std::string line; std::getline(lines, line);)
        if (line.rfind("FAIL", 0) == 0 || line.rfind("summary", 0) == 0) std::cout << "    " << line << "\n";
    return {same && code == 0 && s < 300.0, std::string("loss logs ") + (same ? "byte-identical" : "differ") +
                                                 "; selftest --full exit " + std::to_string(code) + " in " +
                                                 selftest::fmt(s) + " s"};
}

Outcome criterion10(const Ablation& a) {
    // Warp D(x; c) = x + c: with codes 0 and -t a translated copy lands on
    // the original in template space, so the warp is the identity there.
    NetworkConfig nc = selftest::grad_check_network();
    nc.code_dim = 3;
    nc.warp_layers = 1;
    nc.warp_width = 6;
    inr::TemplateNet net(nc, 1);
    auto& ps = net.theta_t();
    for (auto& e : ps.entries())
        if (e.name.rfind("warp.", 0) == 0) std::fill(e.value.mutable_data().begin(), e.value.mutable_data().end(), 0.0);
    auto& w0 = ps.entries()[0].value.mutable_data();
    auto& w1 = ps.entries()[2].value.mutable_data();
    for (std::size_t k = 0; k < 3; ++k) {
        w0[(3 + k) * 6 + k] = 1.0;
        w0[(3 + k) * 6 + 3 + k] = -1.0;
        w1[k * 3 + k] = 1.0;
        w1[(3 + k) * 3 + k] = -1.0;
    }
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    geo::PointSet shape, copy;
    const Vec3 t(0.4, -0.3, 0.2);
    for (int i = 0; i < 500; ++i) {
        shape.points.emplace_back(u(rng), u(rng), u(rng));
        copy.points.push_back(shape.points.back() + t);
    }
    const auto pred = extract::correspondences(net, shape, ad::Tensor::matrix(1, 3, {0, 0, 0}), copy,
                                               ad::Tensor::matrix(1, 3, {-t.x(), -t.y(), -t.z()}));
    const double c0 = eval::corr_l2(pred.points, copy.points);
    std::string detail = "translated copy Corr_l2 " + selftest::fmt(c0);
    bool ok = c0 == 0.0;
    if (!a.error.empty()) return {false, detail + "; " + a.error};
    const auto& full = a.runs.at(train::Mode::full);
    const auto& inr_only = a.runs.at(train::Mode::inr_only);
    if (!full.corr || !inr_only.corr) return {false, detail + "; Corr_l2 missing from a run"};
    ok = ok && *full.corr <= *inr_only.corr;
    return {ok, detail + "; primitive corpus Corr_l2 full " + selftest::fmt(*full.corr) + " vs inr_only " +
                    selftest::fmt(*inr_only.corr)};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <work-dir> [criteria...]\n";
        return 2;
    }
    const fs::path work = argv[1];
    fs::create_directories(work);
    std::set<int> only;
    for (int i = 2; i < argc; ++i) only.insert(std::stoi(argv[i]));
    auto wanted = [&](int k) { return only.empty() || only.count(k) > 0; };

    int failures = 0;
    auto report = [&](int k, const std::string& name, const Outcome& o) {
        std::cout << "criterion " << k << " " << (o.passed ? "PASS" : "FAIL") << " " << name << ": " << o.detail << std::endl;
        failures += !o.passed;
    };
    auto guarded = [&](int k, const std::string& name, const std::function<Outcome()>& f) {
        if (!wanted(k)) return;
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        report(k, name, o);
    };

    guarded(1, "gradient correctness", criterion1);
    guarded(2, "geometry oracles", criterion2);
    guarded(3, "involution semantics", criterion3);
    guarded(4, "dataset soundness", [&] { return criterion4(work); });
    Ablation ablation;
    if (wanted(5) || wanted(6) || wanted(7) || wanted(10)) {
        std::cout << "training the four ablation modes on the primitive corpus" << std::endl;
        ablation = run_ablation(work);
    }
    guarded(5, "ablation trend", [&] { return criterion5(ablation); });
    guarded(6, "supervised ordering", [&] { return criterion6(ablation); });
    guarded(7, "alternation and freeze invariants", [&] { return criterion7(ablation); });
    guarded(8, "extraction oracle", criterion8);
    guarded(9, "determinism", [&] {
        if (!fs::exists(work / "box10" / "manifest.json")) criterion4(work);
        return criterion9(work);
    });
    guarded(10, "correspondence sanity", [&] { return criterion10(ablation); });
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
