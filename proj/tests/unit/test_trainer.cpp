#include <gtest/gtest.h>

#include <map>
#include <set>

#include "ivc/trainer/trainer.hpp"
#include "support/fixtures.hpp"

using namespace ivc;
using namespace ivc::train;

namespace {

class TrainerTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = new std::filesystem::path(fixture::temp_dir("trainer"));
        fixture::tiny_dataset(*root_);
        data_ = new std::shared_ptr<const SplitData>(
            std::make_shared<const SplitData>(load_split(*root_, scan::Split::train, true)));
    }
    static void TearDownTestSuite() {
        std::filesystem::remove_all(*root_);
        delete data_;
        delete root_;
    }

    static TrainConfig cfg() { return fixture::tiny_train_config(*root_); }
    static std::shared_ptr<const SplitData> data() { return *data_; }

    static std::vector<std::vector<double>> snapshot(const ad::ParamSet& ps) {
        std::vector<std::vector<double>> out;
        for (const auto& e : ps.entries()) out.push_back(e.value.data());
        return out;
    }

    static std::filesystem::path* root_;
    static std::shared_ptr<const SplitData>* data_;
};

std::filesystem::path* TrainerTest::root_ = nullptr;
std::shared_ptr<const SplitData>* TrainerTest::data_ = nullptr;

}  // namespace

TEST(LrSchedule, DecaysByHalfEvery500Epochs) {
    TrainConfig c;
    EXPECT_DOUBLE_EQ(lr_schedule(0, c), 5e-4);
    EXPECT_DOUBLE_EQ(lr_schedule(499.99, c), 5e-4);
    EXPECT_DOUBLE_EQ(lr_schedule(500, c), 2.5e-4);
    EXPECT_DOUBLE_EQ(lr_schedule(2499, c), 3.125e-5);
}

TEST(TrainConfigJson, RoundTripsAndRejectsUnknownKeys) {
    TrainConfig c = TrainConfig::desk();
    c.mode = Mode::no_invo;
    c.inr_weights.l3 = 0.25;
    c.network.warp_layers = 3;
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_THROW(config_from_json(json{{"batch_sise", 4}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"network", {{"width", 4}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"mode", "fast"}}), ConfigError);
}

TEST(TrainConfigJson, DeskPresetThenOverrides) {
    const auto c = config_from_json(json{{"preset", "desk"}, {"max_iterations", 7}});
    EXPECT_EQ(c.network.n_seeds, 32u);
    EXPECT_EQ(c.network.n_output(), 512u);
    EXPECT_EQ(c.max_iterations, 7u);
}

TEST(TrainConfigValidate, Invariants) {
    TrainConfig c;
    c.batch_size = 1;
    EXPECT_THROW(c.validate(), ConfigError);
    c.mode = Mode::inr_only;
    EXPECT_NO_THROW(c.validate());
    c.inr_weights.l4 = -1;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrainConfigValidate, NoInvoForcesL1ToZero) {
    TrainConfig c;
    EXPECT_EQ(c.l1_effective(), 1.0);
    c.mode = Mode::no_invo;
    EXPECT_EQ(c.l1_effective(), 0.0);
    c.mode = Mode::supervised;
    c.supervised_no_invo = true;
    EXPECT_EQ(c.l1_effective(), 0.0);
}

TEST_F(TrainerTest, BatchHasDistinctInstances) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto b = build_batch(*data(), 4, rng);
        ASSERT_EQ(b.size(), 4u);
        std::set<std::uint32_t> ids;
        for (auto r : b) ids.insert(data()->observations[r].instance_id);
        EXPECT_EQ(ids.size(), 4u);
    }
    EXPECT_THROW(build_batch(*data(), 5, rng), ConfigError);
    std::mt19937_64 a(9), b(9);
    EXPECT_EQ(build_batch(*data(), 3, a), build_batch(*data(), 3, b));
}

TEST_F(TrainerTest, SmokeRunAlternatesPhases) {
    Trainer t(cfg(), data());
    std::map<Phase, int> count;
    for (int i = 0; i < 10; ++i) count[t.step().phase]++;
    EXPECT_EQ(t.history().size(), 10u);
    EXPECT_EQ(count[Phase::inr], 5);
    EXPECT_EQ(count[Phase::completion], 5);
    for (const auto& r : t.history()) {
        EXPECT_EQ(r.l_t.has_value(), r.phase == Phase::inr);
        EXPECT_EQ(r.l_invo.has_value(), r.phase == Phase::completion);
    }
    // Warm-up of 4 iterations, refresh every 4: extractions at iterations 5 and 9.
    EXPECT_EQ(t.template_refreshes(), 2u);
}

TEST_F(TrainerTest, ConsecutiveStepsTouchDisjointSets) {
    Trainer t(cfg(), data());
    auto& m = t.model();
    for (int i = 0; i < 8; ++i) {
        const auto g0 = snapshot(m.completion.theta_g());
        const auto u0 = snapshot(m.completion.theta_u());
        const auto t0 = snapshot(m.inr.theta_t());
        const auto r = t.step();
        const bool g_same = g0 == snapshot(m.completion.theta_g());
        const bool u_same = u0 == snapshot(m.completion.theta_u());
        const bool t_same = t0 == snapshot(m.inr.theta_t());
        if (r.phase == Phase::inr) {
            EXPECT_TRUE(g_same && u_same) << "iteration " << i;
            EXPECT_FALSE(t_same) << "iteration " << i;
        } else {
            EXPECT_TRUE(t_same) << "iteration " << i;
            EXPECT_FALSE(g_same || u_same) << "iteration " << i;
        }
    }
}

TEST_F(TrainerTest, InrOnlyNeverLeavesInrPhase) {
    auto c = cfg();
    c.mode = Mode::inr_only;
    Trainer t(c, data());
    const auto u0 = snapshot(t.model().completion.theta_u());
    const auto g0 = snapshot(t.model().completion.theta_g());
    for (int i = 0; i < 6; ++i) EXPECT_EQ(t.step().phase, Phase::inr);
    EXPECT_EQ(u0, snapshot(t.model().completion.theta_u()));
    EXPECT_NE(g0, snapshot(t.model().completion.theta_g()));  // the encoder learns with theta_T
    EXPECT_EQ(t.template_refreshes(), 0u);
}

TEST_F(TrainerTest, CompletionOnlyNeverTouchesTemplateNet) {
    auto c = cfg();
    c.mode = Mode::completion_only;
    Trainer t(c, data());
    const auto t0 = snapshot(t.model().inr.theta_t());
    for (int i = 0; i < 6; ++i) {
        const auto r = t.step();
        EXPECT_EQ(r.phase, Phase::completion);
        EXPECT_EQ(*r.l_g, 0.0);
    }
    EXPECT_EQ(t0, snapshot(t.model().inr.theta_t()));
}

TEST_F(TrainerTest, NoInvoLogsInvolutionButDoesNotWeightIt) {
    auto a = cfg();
    auto b = cfg();
    b.mode = Mode::no_invo;
    Trainer ta(a, data()), tb(b, data());
    ta.step();
    tb.step();
    const auto ra = ta.step();
    const auto rb = tb.step();
    // Same inputs and parameters before this step; only the update differs.
    EXPECT_EQ(*ra.l_invo, *rb.l_invo);
    EXPECT_EQ(*ra.l_part, *rb.l_part);
    EXPECT_NE(snapshot(ta.model().completion.theta_g()), snapshot(tb.model().completion.theta_g()));
    EXPECT_EQ(snapshot(ta.model().completion.theta_u()), snapshot(tb.model().completion.theta_u()));
}

TEST_F(TrainerTest, SupervisedUsesGroundTruthTargets) {
    auto c = cfg();
    c.mode = Mode::supervised;
    Trainer t(c, data());
    t.step();
    const auto r = t.step();
    EXPECT_GT(*r.l_g, 0.0);
    EXPECT_GT(*r.l_u, 0.0);
    EXPECT_EQ(t.template_refreshes(), 0u);

    auto no_gt = std::make_shared<SplitData>(*data());
    no_gt->gt.clear();
    EXPECT_THROW(Trainer(c, no_gt), ConfigError);
}

TEST_F(TrainerTest, SameSeedSameLog) {
    Trainer a(cfg(), data()), b(cfg(), data());
    for (int i = 0; i < 10; ++i) EXPECT_EQ(to_csv_row(a.step()), to_csv_row(b.step()));
    auto other = cfg();
    other.seed = 12;
    Trainer c(other, data());
    EXPECT_NE(to_csv_row(c.step()), to_csv_row(Trainer(cfg(), data()).step()));
}

TEST_F(TrainerTest, ResumeIsBitExact) {
    const auto dir = fixture::temp_dir("trainer_resume");
    for (std::size_t k : {3u, 6u}) {
        Trainer a(cfg(), data());
        for (std::size_t i = 0; i < k; ++i) a.step();
        a.save(dir / "ck");
        const auto next_a = to_csv_row(a.step());
        Trainer b(cfg(), data());
        b.load(dir / "ck");
        EXPECT_EQ(b.iteration(), k);
        EXPECT_EQ(to_csv_row(b.step()), next_a);
        for (std::size_t s = 0; s < 3; ++s)
            EXPECT_EQ(snapshot(*a.model().sets()[s]), snapshot(*b.model().sets()[s]));
        EXPECT_EQ(a.template_cloud(), b.template_cloud());
    }
    auto other = cfg();
    other.batch_size = 3;
    Trainer c(other, data());
    EXPECT_THROW(c.load(dir / "ck"), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_F(TrainerTest, TrainWritesLogAndResumedLogMatches) {
    const auto dir = fixture::temp_dir("trainer_run");
    auto c = cfg();
    c.checkpoint_every = 4;
    const auto res = train::train(c, data(), dir / "full");
    EXPECT_EQ(res.iterations, 10u);
    const auto log = fixture::slurp(res.loss_log);
    EXPECT_EQ(log.substr(0, log.find('\n')), kLossLogHeader);
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 11);
    ASSERT_TRUE(std::filesystem::exists(dir / "full" / "ckpt" / "iter_8.ivck"));

    // Resume from iteration 8 in a fresh directory: the tail of the log matches.
    std::filesystem::create_directories(dir / "resumed");
    const auto resumed = train::train(c, data(), dir / "resumed", dir / "full" / "ckpt" / "iter_8");
    EXPECT_EQ(resumed.iterations, 10u);
    const auto tail = fixture::slurp(resumed.loss_log);
    const auto tail_rows = tail.substr(tail.find('\n') + 1);
    EXPECT_EQ(log.substr(log.size() - tail_rows.size()), tail_rows);
    EXPECT_EQ(fixture::slurp(dir / "full" / "checkpoint.ivck"), fixture::slurp(dir / "resumed" / "checkpoint.ivck"));

    const auto model = load_model(res.checkpoint);
    EXPECT_EQ(to_json(model->cfg), to_json(c));
    std::filesystem::remove_all(dir);
}

TEST_F(TrainerTest, NonFiniteLossAbortsWithDiagnostic) {
    Trainer t(cfg(), data());
    auto& e = t.model().inr.theta_t().entries().back();  // UDF output bias
    e.value.mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
    try {
        t.step();
        FAIL() << "expected NumericError";
    } catch (const NumericError& err) {
        const std::string msg = err.what();
        EXPECT_NE(msg.find("iteration 0"), std::string::npos) << msg;
        EXPECT_NE(msg.find("INR"), std::string::npos) << msg;
        EXPECT_NE(msg.find("L_T="), std::string::npos) << msg;
    }
}
