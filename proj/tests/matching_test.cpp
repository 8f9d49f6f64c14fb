#include "dmab/matching.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dmab/arms.hpp"
#include "dmab/rng.hpp"

using namespace dmab;

namespace {

ValueMatrix demo_matrix() {
    ValueMatrix v(2, 2);
    v.at(0, 0) = 0.8;
    v.at(0, 1) = 0.6;
    v.at(1, 0) = 0.6;
    v.at(1, 1) = 0.35;
    return v;
}

ValueMatrix random_matrix(int m, int n, RngStream& rng) {
    ValueMatrix v(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) v.at(i, j) = rng.uniform01();
    return v;
}

}  // namespace

TEST(ComputeBid, MarginPlusIncrement) {
    std::vector<double> values = {0.8, 0.6};
    std::vector<double> prices = {0.0, 0.0};
    Bid b = compute_bid(values, prices, 0.01, 2);
    EXPECT_EQ(b.preferred_arm, 0);
    EXPECT_NEAR(b.value, 0.205, 1e-12);
}

TEST(ComputeBid, SingleArmDegeneratesToIncrement) {
    std::vector<double> values = {0.42};
    std::vector<double> prices = {0.0};
    Bid b = compute_bid(values, prices, 0.1, 1);
    EXPECT_EQ(b.preferred_arm, 0);
    EXPECT_NEAR(b.value, 0.1, 1e-15);
}

TEST(ComputeBid, EqualNetValuesTieBreakLowestArm) {
    std::vector<double> values = {0.5, 0.5};
    std::vector<double> prices = {0.0, 0.0};
    Bid b = compute_bid(values, prices, 0.01, 2);
    EXPECT_EQ(b.preferred_arm, 0);
    EXPECT_NEAR(b.value, 0.005, 1e-15);
}

TEST(RunAuction, DemoMatrixFindsOptimalMatching) {
    auto [matching, st] = run_auction(demo_matrix(), 0.01);
    EXPECT_EQ(matching.arm_of, (std::vector<int>{1, 0}));
    EXPECT_NEAR(matching_surplus(demo_matrix(), matching), 1.2, 1e-12);
}

TEST(RunAuction, SinglePlayerTakesArgmaxInOneRound) {
    ValueMatrix v(1, 2);
    v.at(0, 0) = 0.3;
    v.at(0, 1) = 0.9;
    auto [matching, st] = run_auction(v, 0.5);
    EXPECT_EQ(matching.arm_of, (std::vector<int>{1}));
    EXPECT_EQ(st.rounds, 1);
}

TEST(RunAuction, RandomInstancesEpsOptimalAndCapped) {
    RngStream rng(20240607);
    const double eps = 1e-3;
    for (int trial = 0; trial < 100; ++trial) {
        ValueMatrix v = random_matrix(5, 7, rng);
        auto [matching, st] = run_auction(v, eps);
        auto [best, best_surplus] = brute_force_matching(v);
        EXPECT_TRUE(matching.injective());
        EXPECT_LE(best_surplus - matching_surplus(v, matching), eps);
        double vmax = *std::max_element(v.v.begin(), v.v.end());
        EXPECT_LE(static_cast<double>(st.rounds), 25.0 * vmax / eps + 5.0);
    }
}

TEST(RunAuction, PricesMonotoneAndRoundsMakeProgress) {
    RngStream rng(99);
    ValueMatrix v = random_matrix(4, 5, rng);
    const double eps = 1e-3;
    auto [matching, st] = run_auction(v, eps);
    std::vector<double> prev(5, 0.0);
    for (const auto& snap : st.price_history) {
        double raised = 0.0;
        for (std::size_t j = 0; j < snap.size(); ++j) {
            EXPECT_GE(snap[j], prev[j] - 1e-15);
            raised = std::max(raised, snap[j] - prev[j]);
        }
        EXPECT_GE(raised, eps / 4 - 1e-15);  // at least one price moved by eps/M
        prev = snap;
    }
}

TEST(RunAuction, DeterministicTranscripts) {
    RngStream rng(4);
    ValueMatrix v = random_matrix(3, 4, rng);
    auto [m1, s1] = run_auction(v, 1e-3);
    auto [m2, s2] = run_auction(v, 1e-3);
    EXPECT_EQ(m1.arm_of, m2.arm_of);
    ASSERT_EQ(s1.transcript.size(), s2.transcript.size());
    for (std::size_t r = 0; r < s1.transcript.size(); ++r) {
        ASSERT_EQ(s1.transcript[r].size(), s2.transcript[r].size());
        for (std::size_t k = 0; k < s1.transcript[r].size(); ++k) {
            EXPECT_EQ(s1.transcript[r][k].player, s2.transcript[r][k].player);
            EXPECT_EQ(s1.transcript[r][k].arm, s2.transcript[r][k].arm);
            EXPECT_DOUBLE_EQ(s1.transcript[r][k].bid, s2.transcript[r][k].bid);
        }
    }
}

TEST(RunAuction, RowShiftLeavesAssignmentAlone) {
    RngStream rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        ValueMatrix v = random_matrix(3, 5, rng);
        auto [base, s1] = run_auction(v, 1e-3);
        ValueMatrix shifted = v;
        for (int j = 0; j < 5; ++j) shifted.at(1, j) += 0.37;
        auto [moved, s2] = run_auction(shifted, 1e-3);
        EXPECT_EQ(base.arm_of, moved.arm_of) << "trial " << trial;
    }
}

TEST(RunAuction, NegativeValuesStillTerminate) {
    ValueMatrix v(2, 3);
    v.at(0, 0) = -0.5;
    v.at(0, 1) = -0.2;
    v.at(0, 2) = -0.9;
    v.at(1, 0) = -0.1;
    v.at(1, 1) = -0.4;
    v.at(1, 2) = -0.3;
    auto [matching, st] = run_auction(v, 1e-2);
    EXPECT_TRUE(matching.complete());
    EXPECT_TRUE(matching.injective());
    auto [best, best_surplus] = brute_force_matching(v);
    EXPECT_LE(best_surplus - matching_surplus(v, matching), 1e-2);
}

TEST(RunAuction, RejectsNonPositiveEps) {
    EXPECT_THROW(run_auction(demo_matrix(), 0.0), InvalidModelError);
}

TEST(BruteForce, DemoMatrix) {
    auto [m, surplus] = brute_force_matching(demo_matrix());
    EXPECT_EQ(m.arm_of, (std::vector<int>{1, 0}));
    EXPECT_NEAR(surplus, 1.2, 1e-12);
}

TEST(BruteForce, IdentityDominantMatrix) {
    ValueMatrix v(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) v.at(i, j) = i == j ? 1.0 : 0.0;
    auto [m, surplus] = brute_force_matching(v);
    EXPECT_EQ(m.arm_of, (std::vector<int>{0, 1, 2}));
    EXPECT_DOUBLE_EQ(surplus, 3.0);
}

TEST(BruteForce, ChainMeansPickDiagonal) {
    // means produced by the chain statistics themselves
    MarkovArm c11 = two_state_chain(0.3, 0.5);
    MarkovArm c12 = two_state_chain(0.2, 0.6);
    MarkovArm c21 = two_state_chain(0.6, 0.3);
    MarkovArm c22 = two_state_chain(0.7, 0.2);
    ValueMatrix v(2, 2);
    v.at(0, 0) = chain_stats(c11).mean;
    v.at(0, 1) = chain_stats(c12).mean;
    v.at(1, 0) = chain_stats(c21).mean;
    v.at(1, 1) = chain_stats(c22).mean;
    auto [m, surplus] = brute_force_matching(v);
    EXPECT_EQ(m.arm_of, (std::vector<int>{0, 1}));
    EXPECT_NEAR(surplus, 0.375 + 7.0 / 9.0, 1e-12);
}

TEST(BruteForce, SizeGuard) {
    ValueMatrix v(2, 11);
    EXPECT_THROW(brute_force_matching(v), InvalidModelError);
}

TEST(BruteForce, LexicographicTieBreak) {
    ValueMatrix v(2, 2, 0.5);  // every matching ties
    auto [m, surplus] = brute_force_matching(v);
    EXPECT_EQ(m.arm_of, (std::vector<int>{0, 1}));
    EXPECT_DOUBLE_EQ(surplus, 1.0);
}
