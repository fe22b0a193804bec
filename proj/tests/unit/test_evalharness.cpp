#include <gtest/gtest.h>

#include <random>

#include "ivc/evalharness/evaluate.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace ivc;
using namespace ivc::eval;

namespace {

geo::PointSet to_set(const std::vector<oracle::P3>& v) {
    geo::PointSet s;
    for (const auto& p : v) s.points.emplace_back(p[0], p[1], p[2]);
    return s;
}

MetricsRecord sample_record() {
    MetricsRecord m;
    m.mode = "full";
    m.seed = 4;
    m.checkpoint = "ck";
    m.split = "test";
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::uint32_t i = 0; i < 7; ++i) {
        MetricsRow r;
        r.instance_id = i;
        r.view_id = 2 * i;
        r.f1 = 100 * u(rng);
        r.cd = u(rng);
        r.fidelity = u(rng) / 3;
        r.mmd = u(rng);
        if (i % 2 == 0) r.corr_l2 = u(rng);
        m.rows.push_back(r);
    }
    m.rows.back().skipped = "no complete reference samples";
    m.rows.back().cd.reset();
    m.rows.back().f1.reset();
    return m;
}

}  // namespace

TEST(Fidelity, SupersetIsZero) {
    const geo::PointSet partial({Vec3(0, 0, 0), Vec3(1, 0, 0)});
    geo::PointSet completed = partial;
    completed.points.emplace_back(0.3, 0.3, 0.3);
    EXPECT_EQ(eval_fidelity(partial, completed), 0.0);
}

TEST(Fidelity, HandTwoPointCase) {
    const geo::PointSet partial({Vec3(0, 0, 0), Vec3(1, 0, 0)});
    const geo::PointSet completed({Vec3(0, 0, 0), Vec3(0, 0, 2)});
    // Squared distances 0 and 1, averaged over the partial points.
    EXPECT_DOUBLE_EQ(eval_fidelity(partial, completed), 0.5);
}

TEST(Fidelity, NonIncreasingAsCompletionGrows) {
    std::mt19937_64 rng(3);
    const auto partial = to_set(oracle::random_points(rng, 30));
    auto completed = to_set(oracle::random_points(rng, 5));
    double prev = eval_fidelity(partial, completed);
    for (int k = 0; k < 20; ++k) {
        completed.points.push_back(to_set(oracle::random_points(rng, 1)).points[0]);
        const double f = eval_fidelity(partial, completed);
        EXPECT_LE(f, prev);
        prev = f;
    }
}

TEST(Mmd, MemberOfCorpusIsZero) {
    std::mt19937_64 rng(5);
    std::vector<geo::PointSet> corpus;
    for (int i = 0; i < 4; ++i) corpus.push_back(to_set(oracle::random_points(rng, 20)));
    EXPECT_EQ(eval_mmd(corpus[2], corpus), 0.0);
    EXPECT_THROW(eval_mmd(corpus[0], {}), ContractError);
}

TEST(Mmd, SingletonCorpusIsChamfer) {
    std::mt19937_64 rng(6);
    const auto a = to_set(oracle::random_points(rng, 25));
    const auto b = to_set(oracle::random_points(rng, 31));
    EXPECT_EQ(eval_mmd(a, {b}), geo::chamfer_bi(a, b));
}

TEST(Mmd, MatchesBruteForceOverTenReferences) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const auto c = oracle::random_points(rng, 1 + trial * 4);
        std::vector<std::vector<oracle::P3>> refs;
        std::vector<geo::PointSet> corpus;
        for (int i = 0; i < 10; ++i) {
            refs.push_back(oracle::random_points(rng, 5 + static_cast<std::size_t>(i) * 4));
            corpus.push_back(to_set(refs.back()));
        }
        EXPECT_NEAR(eval_mmd(to_set(c), corpus), oracle::mmd(c, refs), 1e-9);
    }
}

TEST(CorrL2, IdentityAndShift) {
    const std::vector<Vec3> a{Vec3(0, 0, 0), Vec3(1, 2, 3)};
    EXPECT_EQ(corr_l2(a, a), 0.0);
    const std::vector<Vec3> b{Vec3(0, 0, 1), Vec3(1, 2, 4)};
    EXPECT_DOUBLE_EQ(corr_l2(a, b), 1.0);
    EXPECT_THROW(corr_l2(a, {}), ContractError);
}

TEST(Metrics, PerfectPredictionScores) {
    std::mt19937_64 rng(8);
    const auto gt = to_set(oracle::random_points(rng, 40));
    EXPECT_EQ(geo::f1_score(gt, gt, kF1Tau), 100.0);
    EXPECT_EQ(kCdScale * geo::chamfer_bi(gt, gt), 0.0);
}

TEST(Report, JsonRoundTrip) {
    const auto m = sample_record();
    const auto back = record_from_json(json::parse(to_json(m).dump()));
    EXPECT_EQ(to_json(back), to_json(m));
}

TEST(Report, CsvRowsAndAggregates) {
    const auto m = sample_record();
    const auto dir = fixture::temp_dir("report");
    emit_report(m, dir);
    const auto csv = fixture::slurp(dir / "metrics.csv");
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), m.rows.size() + 1);
    const auto j = json::parse(fixture::slurp(dir / "metrics.json"));
    // Recompute every column mean from the CSV text.
    std::stringstream ss(csv);
    std::string line;
    std::getline(ss, line);
    std::vector<std::string> header;
    {
        std::stringstream hs(line);
        std::string c;
        while (std::getline(hs, c, ',')) header.push_back(c);
    }
    std::vector<double> sum(header.size(), 0.0);
    std::vector<int> count(header.size(), 0);
    while (std::getline(ss, line)) {
        std::size_t start = 0;
        for (std::size_t col = 0; col < header.size(); ++col) {
            const auto comma = line.find(',', start);
            const auto cell = line.substr(start, comma - start);
            if (!cell.empty() && col >= 2 && col + 1 < header.size()) {
                sum[col] += std::stod(cell);
                ++count[col];
            }
            start = comma + 1;
        }
    }
    for (std::size_t col = 2; col + 1 < header.size(); ++col) {
        const auto& agg = j["aggregates"][header[col]];
        if (count[col] == 0) {
            EXPECT_TRUE(agg.is_null());
            continue;
        }
        EXPECT_NEAR(agg.get<double>(), sum[col] / count[col], 1e-9) << header[col];
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "hist_cd.svg"));
    EXPECT_EQ(fixture::slurp(dir / "hist_cd.svg").rfind("<svg", 0), 0u);
    std::filesystem::remove_all(dir);
}

TEST(Report, LossCurvesFromLog) {
    const auto dir = fixture::temp_dir("report_log");
    {
        std::ofstream out(dir / "loss_log.csv");
        out << train::kLossLogHeader << "\n";
        for (int i = 0; i < 120; ++i) {
            if (i % 2 == 0)
                out << i << ",INR," << 1.0 / (i + 1) << ",0.1,0.2,,,,," << 5e-4 << "\n";
            else
                out << i << ",COMPLETION,,,,0,0," << 2.0 / (i + 1) << ",0.01," << 5e-4 << "\n";
        }
    }
    const auto t = read_loss_log(dir / "loss_log.csv");
    EXPECT_EQ(t.phase.size(), 120u);
    EXPECT_TRUE(std::isnan(t.column("L_T")[1]));
    const auto s = smoothed(t, "L_T", 10);
    EXPECT_EQ(s.x.size(), 60u);
    EXPECT_GT(s.y.front(), s.y.back());
    emit_report(sample_record(), dir, dir / "loss_log.csv");
    EXPECT_NE(fixture::slurp(dir / "loss_curves.svg").find("L_invo"), std::string::npos);
    std::filesystem::remove_all(dir);
}

class EvaluateTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = new std::filesystem::path(fixture::temp_dir("evaluate"));
        fixture::tiny_dataset(*root_, 4, scan::Family::ellipsoid);
    }
    static void TearDownTestSuite() {
        std::filesystem::remove_all(*root_);
        delete root_;
    }

    static std::unique_ptr<train::Model> trained(train::Mode mode) {
        auto c = fixture::tiny_train_config(*root_);
        c.mode = mode;
        auto data = std::make_shared<const train::SplitData>(train::load_split(*root_, scan::Split::train, true));
        const auto dir = *root_ / ("run_" + train::to_string(mode));
        const auto res = train::train(c, data, dir);
        return train::load_model(res.checkpoint);
    }

    static EvalConfig config() {
        EvalConfig e;
        e.projection.n_candidates = 512;
        e.projection.level_tol = 0.05;  // an untrained field rarely gets below 5e-3
        e.corr_queries = 32;
        return e;
    }

    static std::filesystem::path* root_;
};

std::filesystem::path* EvaluateTest::root_ = nullptr;

TEST_F(EvaluateTest, MetricsMatchDirectGeometryCalls) {
    auto model = trained(train::Mode::full);
    const auto test = train::load_split(*root_, scan::Split::test, true);
    const auto train_split = train::load_split(*root_, scan::Split::train, true);
    const auto corpus = reference_corpus(train_split);
    const auto cfg = config();
    const auto rec = evaluate(*model, test, corpus, cfg, "ck");
    ASSERT_EQ(rec.rows.size(), test.observations.size());
    for (std::size_t i = 0; i < rec.rows.size(); ++i) {
        const auto& row = rec.rows[i];
        ASSERT_TRUE(row.skipped.empty()) << row.skipped;
        const auto& obs = test.observations[i];
        const auto xp = train::eval_input(obs, model->cfg.n_input_points, cfg.seed);
        const auto c = complete(*model, xp, model->cfg.network.n_output(),
                                mix_seed(cfg.seed, (std::uint64_t{obs.instance_id} << 32) | obs.view_id), cfg.projection);
        const geo::PointSet gt(test.gt.at(obs.instance_id));
        EXPECT_NEAR(*row.cd, 1e3 * geo::chamfer_bi(c.completed, gt), 1e-12);
        EXPECT_NEAR(*row.f1, geo::f1_score(c.completed, gt, 0.03), 1e-12);
        EXPECT_NEAR(*row.fidelity, geo::chamfer_single(geo::from_tensor(xp), c.completed), 1e-12);
        EXPECT_NEAR(*row.mmd, eval_mmd(c.completed, corpus), 1e-12);
        ASSERT_TRUE(c.direct.has_value());
        EXPECT_NEAR(*row.cd_direct, 1e3 * geo::chamfer_bi(*c.direct, gt), 1e-12);
    }
    // Consecutive same-family instances give one pair per instance but the last.
    EXPECT_EQ(rec.values("corr_l2").size(), 3u);

    // Purity and thread independence.
    auto cfg3 = cfg;
    cfg3.threads = 3;
    EXPECT_EQ(to_json(evaluate(*model, test, corpus, cfg, "ck")), to_json(rec));
    EXPECT_EQ(to_json(evaluate(*model, test, corpus, cfg3, "ck")), to_json(rec));
}

TEST_F(EvaluateTest, CompletionOnlyUsesNetworkOutput) {
    auto model = trained(train::Mode::completion_only);
    const auto test = train::load_split(*root_, scan::Split::test, true);
    const auto rec = evaluate(*model, test, {}, config());
    for (const auto& r : rec.rows) {
        ASSERT_TRUE(r.cd && r.cd_direct);
        EXPECT_EQ(*r.cd, *r.cd_direct);
        EXPECT_FALSE(r.corr_l2.has_value());
        EXPECT_FALSE(r.mmd.has_value());
    }
}

TEST_F(EvaluateTest, MissingReferenceSamplesAreSkippedWithReason) {
    auto model = trained(train::Mode::inr_only);
    auto test = train::load_split(*root_, scan::Split::test, false);
    const auto rec = evaluate(*model, test, {}, config());
    for (const auto& r : rec.rows) {
        EXPECT_FALSE(r.cd.has_value());
        EXPECT_FALSE(r.cd_direct.has_value());
        EXPECT_FALSE(r.skipped.empty());
    }
}
