#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ivc/autodiff/grad_check.hpp"
#include "ivc/geometry/diff_chamfer.hpp"
#include "ivc/geometry/metrics.hpp"
#include "support/oracles.hpp"

using namespace ivc;
using namespace ivc::geo;

namespace {

PointSet to_ps(const std::vector<oracle::P3>& v) {
    PointSet ps;
    for (const auto& p : v) ps.points.emplace_back(p[0], p[1], p[2]);
    return ps;
}

PointSet pts(std::initializer_list<Vec3> v) { return PointSet(std::vector<Vec3>(v)); }

}  // namespace

TEST(Chamfer, IdentityIsZero) {
    std::mt19937_64 rng(1);
    const auto a = to_ps(oracle::random_points(rng, 30));
    EXPECT_EQ(chamfer_bi(a, a), 0.0);
}

TEST(Chamfer, SinglePointPair) {
    EXPECT_DOUBLE_EQ(chamfer_bi(pts({{0, 0, 0}}), pts({{1, 0, 0}})), 2.0);
}

TEST(Chamfer, SingleSided) {
    EXPECT_DOUBLE_EQ(chamfer_single(pts({{0, 0, 0}, {2, 0, 0}}), pts({{0, 0, 0}})), 2.0);
    const auto b = pts({{0, 0, 0}, {2, 0, 0}, {5, 1, 1}});
    EXPECT_EQ(chamfer_single(pts({{0, 0, 0}, {2, 0, 0}}), b), 0.0);
}

TEST(Chamfer, EmptyRejected) {
    EXPECT_THROW(chamfer_bi(PointSet{}, pts({{0, 0, 0}})), ContractError);
    EXPECT_THROW(chamfer_single(pts({{0, 0, 0}}), PointSet{}), ContractError);
}

TEST(Chamfer, MatchesBruteForceAndIsSymmetric) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> n(1, 400);
    for (int trial = 0; trial < 40; ++trial) {
        const auto a = oracle::random_points(rng, n(rng));
        const auto b = oracle::random_points(rng, n(rng));
        const auto pa = to_ps(a), pb = to_ps(b);
        EXPECT_NEAR(chamfer_bi(pa, pb), oracle::chamfer_bi(a, b), 1e-12);
        EXPECT_NEAR(chamfer_bi(pa, pb), chamfer_bi(pb, pa), 1e-12);
        EXPECT_DOUBLE_EQ(chamfer_bi(pa, pb), chamfer_single(pa, pb) + chamfer_single(pb, pa));
        EXPECT_GE(chamfer_single(pa, pb), 0.0);
    }
}

TEST(KdTree, ExactAgainstBruteForce) {
    std::mt19937_64 rng(3);
    const auto base = oracle::random_points(rng, 500);
    std::vector<Vec3> pts3;
    for (const auto& p : base) pts3.emplace_back(p[0], p[1], p[2]);
    // Duplicates exercise the lowest-index tie rule.
    pts3.push_back(pts3[10]);
    pts3.push_back(pts3[3]);
    const KdTree tree(pts3);
    const auto queries = oracle::random_points(rng, 200, -1.2, 1.2);
    for (const auto& q : queries) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < pts3.size(); ++i) {
            const double d = oracle::sq(q, {pts3[i].x(), pts3[i].y(), pts3[i].z()});
            if (d < best) {
                best = d;
                arg = i;
            }
        }
        const auto nn = tree.nearest(Vec3(q[0], q[1], q[2]));
        EXPECT_EQ(nn.index, arg);
        EXPECT_EQ(nn.sq_dist, best);
    }
    EXPECT_EQ(tree.nearest(pts3[10]).index, 10u);
    EXPECT_EQ(tree.nearest(pts3[3]).index, 3u);
}

TEST(F1, PerfectAndDisjoint) {
    std::mt19937_64 rng(4);
    const auto a = to_ps(oracle::random_points(rng, 50));
    EXPECT_EQ(f1_score(a, a, 0.03), 100.0);
    auto far = a;
    for (auto& p : far.points) p += Vec3(10, 0, 0);
    EXPECT_EQ(f1_score(far, a, 0.03), 0.0);
}

TEST(F1, HandCase) {
    EXPECT_NEAR(f1_score(pts({{0, 0, 0}, {1, 0, 0}}), pts({{0, 0, 0}}), 0.03), 200.0 / 3.0, 1e-12);
}

TEST(F1, MonotoneInTau) {
    std::mt19937_64 rng(5);
    const auto a = to_ps(oracle::random_points(rng, 60));
    const auto b = to_ps(oracle::random_points(rng, 70));
    double prev = 0.0;
    for (double tau = 0.01; tau < 2.0; tau *= 1.3) {
        const double f = f1_score(a, b, tau);
        EXPECT_GE(f, prev);
        prev = f;
    }
    EXPECT_THROW(f1_score(a, b, 0.0), ContractError);
}

TEST(Fps, FullSelectionIsPermutation) {
    std::mt19937_64 rng(6);
    const auto p = to_ps(oracle::random_points(rng, 25));
    auto idx = fps_indices(p.points, 25, 3);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(idx[i], i);
}

TEST(Fps, CollinearEndpoints) {
    const auto p = pts({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
    const auto s = fps(p, 2, 0);
    EXPECT_EQ(s[0].x(), 0.0);
    EXPECT_EQ(s[1].x(), 3.0);
}

TEST(Fps, GreedyPropertyAgainstBruteForce) {
    std::mt19937_64 rng(7);
    const auto raw = oracle::random_points(rng, 50);
    const auto order = fps_indices(to_ps(raw).points, 20, 0);
    EXPECT_TRUE(oracle::fps_is_greedy(raw, order));
}

TEST(Fps, Errors) {
    const auto p = pts({{0, 0, 0}, {1, 0, 0}});
    EXPECT_THROW(fps(p, 3, 0), ContractError);
    EXPECT_THROW(fps(p, 0, 0), ContractError);
}

TEST(Huber, Values) {
    EXPECT_EQ(huber(0.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(huber(0.5, 1.0), 0.125);
    EXPECT_DOUBLE_EQ(huber(2.0, 1.0), 1.5);
    EXPECT_DOUBLE_EQ(huber(-2.0, 1.0), 1.5);
}

TEST(DiffChamfer, ValueParity) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> n(1, 60);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = to_ps(oracle::random_points(rng, n(rng)));
        const auto b = to_ps(oracle::random_points(rng, n(rng)));
        EXPECT_NEAR(diff_chamfer_bi(to_tensor(a), to_tensor(b)).item(), chamfer_bi(a, b), 1e-12);
        EXPECT_NEAR(diff_chamfer_single(to_tensor(a), to_tensor(b)).item(), chamfer_single(a, b), 1e-12);
    }
}

TEST(DiffChamfer, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(9);
    const auto a = to_tensor(to_ps(oracle::random_points(rng, 12)));
    const auto b = to_tensor(to_ps(oracle::random_points(rng, 17)));
    // Random continuous points have unique nearest neighbors almost surely,
    // and a 1e-6 step does not change the matching.
    EXPECT_LT(ad::grad_check([&](const ad::Tensor& x) { return diff_chamfer_bi(x, b); }, a, 1e-6), 1e-4);
    EXPECT_LT(ad::grad_check([&](const ad::Tensor& x) { return diff_chamfer_bi(a, x); }, b, 1e-6), 1e-4);
    EXPECT_LT(ad::grad_check([&](const ad::Tensor& x) { return diff_chamfer_single(x, b); }, a, 1e-6), 1e-4);
    EXPECT_LT(ad::grad_check([&](const ad::Tensor& x) { return ad::sum(diff_huber(x, 0.25)); }, a, 1e-6), 1e-4);
}

TEST(DiffChamfer, CoincidentSetsGiveZeroGradient) {
    std::mt19937_64 rng(10);
    const auto p = to_ps(oracle::random_points(rng, 20));
    ad::Tensor a = to_tensor(p, true), b = to_tensor(p, true);
    const auto loss = diff_chamfer_bi(a, b);
    EXPECT_EQ(loss.item(), 0.0);
    ad::backward(loss);
    for (double g : a.grad()) EXPECT_EQ(g, 0.0);
    for (double g : b.grad()) EXPECT_EQ(g, 0.0);
}
