#include "dmab/bounds.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "dmab/arms.hpp"
#include "dmab/matching.hpp"
#include "dmab/rng.hpp"

using namespace dmab;

namespace {

GapStats single_gap_02() { return gap_stats(std::vector<double>{0.8, 0.6}); }

ValueMatrix demo_matrix() {
    ValueMatrix v(2, 2);
    v.at(0, 0) = 0.8;
    v.at(0, 1) = 0.6;
    v.at(1, 0) = 0.6;
    v.at(1, 1) = 0.35;
    return v;
}

MarkovConstants chain_pair_constants() {
    static MarkovArm c1 = two_state_chain(0.3, 0.5);
    static MarkovArm c2 = two_state_chain(0.2, 0.6);
    return markov_constants({&c1, &c2});
}

MarkovConstants chain_grid_constants() {
    static MarkovArm c11 = two_state_chain(0.3, 0.5);
    static MarkovArm c12 = two_state_chain(0.2, 0.6);
    static MarkovArm c21 = two_state_chain(0.6, 0.3);
    static MarkovArm c22 = two_state_chain(0.7, 0.2);
    return markov_constants({&c11, &c12, &c21, &c22});
}

}  // namespace

TEST(GapStats, SinglePlayerMeans) {
    GapStats g = single_gap_02();
    ASSERT_EQ(g.gaps.size(), 1u);
    EXPECT_NEAR(g.gaps[0], 0.2, 1e-12);
    EXPECT_NEAR(g.gap_min, 0.2, 1e-12);
    EXPECT_NEAR(g.gap_max, 0.2, 1e-12);
    EXPECT_NEAR(g.optimal, 0.8, 1e-15);
}

TEST(GapStats, DemoMatrixEnumeration) {
    GapStats g = gap_stats(demo_matrix());
    ASSERT_EQ(g.gaps.size(), 1u);  // two matchings in a 2x2
    EXPECT_NEAR(g.gap_min, 0.05, 1e-12);
    EXPECT_NEAR(g.gap_max, 0.05, 1e-12);
    EXPECT_NEAR(g.optimal, 1.2, 1e-12);
}

TEST(GapStats, DegenerateMeansAreRejected) {
    EXPECT_THROW(gap_stats(std::vector<double>{0.5, 0.5, 0.5}), UndefinedBoundError);
    ValueMatrix flat(2, 2, 0.4);
    EXPECT_THROW(gap_stats(flat), UndefinedBoundError);
    ValueMatrix lone(1, 1, 0.7);  // single matching: nothing to take a gap over
    EXPECT_THROW(gap_stats(lone), UndefinedBoundError);
}

TEST(MarkovConstantsTest, ReferenceChainValues) {
    MarkovConstants row1 = chain_pair_constants();
    EXPECT_NEAR(row1.correction, 1.0 / 0.375 + 1.0 / 0.25, 1e-12);
    EXPECT_NEAR(row1.visit_ratio, 2.0 / 0.25, 1e-12);
    EXPECT_NEAR(row1.rho_min, 0.96, 1e-12);
    EXPECT_NEAR(row1.kappa_floor_single(), 700.0, 1e-9);

    MarkovConstants all = chain_grid_constants();
    EXPECT_NEAR(all.pi_min, 2.0 / 9.0, 1e-12);
    EXPECT_NEAR(all.visit_ratio, 9.0, 1e-12);
    EXPECT_NEAR(all.correction, 1.0 / 0.375 + 4.0 + 3.0 + 4.5, 1e-12);
    EXPECT_NEAR(all.kappa_floor_multi(2), 224.0 * 4.0 / 0.96, 1e-9);
}

// ------------------------------------------------------------ ucb1 / ucb4

TEST(BoundUcb1, HandArithmetic) {
    GapStats g = single_gap_02();
    double expect = 8.0 / 0.2 + (1.0 + std::numbers::pi * std::numbers::pi / 3.0) * 0.2;
    EXPECT_NEAR(bound_ucb1_periodic(g, 1, std::exp(1.0)), expect, 1e-12);
    EXPECT_NEAR(expect, 40.85797362673929, 1e-10);
}

TEST(BoundUcb1, LinearInL) {
    GapStats g = single_gap_02();
    EXPECT_NEAR(bound_ucb1_periodic(g, 8, 100.0), 2.0 * bound_ucb1_periodic(g, 4, 100.0), 1e-9);
}

TEST(BoundUcb1, AtTimeOneOnlyTheConstantTerm) {
    GapStats g = single_gap_02();
    double expect = 3.0 * (1.0 + std::numbers::pi * std::numbers::pi / 3.0) * 0.2;
    EXPECT_NEAR(bound_ucb1_periodic(g, 3, 1.0), expect, 1e-12);
}

TEST(BoundUcb4, HandArithmetic) {
    GapStats g = single_gap_02();
    EXPECT_NEAR(bound_ucb4(g, 1.0, 2, std::exp(1.0)), 668.8, 1e-9);
    EXPECT_NEAR(bound_ucb4(g, 0.0, 2, 1.0), 0.2 * 4.0, 1e-12);  // T=1: gap_max * 2N
}

TEST(BoundUcb4, AffineInCost) {
    GapStats g = single_gap_02();
    double c1 = bound_ucb4(g, 1.0, 2, 1.0);
    double c2 = bound_ucb4(g, 2.0, 2, 1.0);
    EXPECT_NEAR(c2 - c1, 1.0 * (2.0 * 2), 1e-12);  // +Delta C * 2N at T=1
}

TEST(BoundUcb4Precise, ZeroEpsReducesExactly) {
    RngStream rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> means = {0.2 + 0.7 * rng.uniform01(), 0.1 * rng.uniform01(),
                                     0.05 + 0.1 * rng.uniform01()};
        GapStats g = gap_stats(means);
        CostModel cost{rng.uniform01() * 3.0, rng.uniform01()};
        double T = 1.0 + rng.uniform01() * 1e6;
        int n = 3;
        EXPECT_EQ(bound_ucb4_precise(g, cost, 0.0, n, T), bound_ucb4(g, cost.eval(0.0), n, T));
    }
}

TEST(BoundUcb4Precise, PoleGuardThrows) {
    GapStats g = single_gap_02();
    CostModel cost{1.0, 0.0};
    EXPECT_THROW(bound_ucb4_precise(g, cost, g.gap_min, 2, 10.0), UndefinedBoundError);
    EXPECT_THROW(bound_ucb4_precise(g, cost, 0.5, 2, 10.0), UndefinedBoundError);
    EXPECT_NO_THROW(bound_ucb4_precise(g, cost, 0.19, 2, 10.0));
}

TEST(BoundUcb4PreciseUnknown, PrefixPlusTail) {
    GapStats g = single_gap_02();
    CostModel cost{1.0, 0.5};
    Schedule eps_t{ScheduleKind::EpsDecay, 1.0};
    double T = 30000.0;
    double got = bound_ucb4_precise_unknown(g, cost, eps_t, 2, T);
    // recompute by hand: eps_min = 0.1, t0 = first t with 1/ln(e+t) < 0.1
    double eps_min = 0.1;
    long t0 = 0;
    for (long t = 1; t <= 30000; ++t)
        if (1.0 / std::log(std::exp(1.0) + t) < eps_min) {
            t0 = t;
            break;
        }
    ASSERT_GT(t0, 0);
    double lT = std::log(T);
    double expect = (0.2 + cost.eval(eps_min)) * t0 +
                    (0.2 + cost.eval(eps_t.value(T)) * (1.0 + lT)) *
                        (12.0 * lT / (0.1 * 0.1) + 4.0);
    EXPECT_NEAR(got, expect, std::abs(expect) * 1e-12);
    // a schedule that never gets there is refused
    Schedule stuck{ScheduleKind::Constant, 0.5};
    EXPECT_THROW(bound_ucb4_precise_unknown(g, cost, stuck, 2, T), UndefinedBoundError);
}

// ------------------------------------------------------------ markov bounds

TEST(BoundUcb4Markov, TimeOneAndKappaGuard) {
    GapStats g = gap_stats(std::vector<double>{0.375, 0.25});
    MarkovConstants c = chain_pair_constants();
    double expect = (g.gap_max + 1.0) * (2.0 * (2.0 * c.visit_ratio + 1.0)) + c.correction;
    EXPECT_NEAR(bound_ucb4_markov(g, c, 701.0, 1.0, 2, 1.0), expect, 1e-12);
    EXPECT_THROW(bound_ucb4_markov(g, c, 699.0, 1.0, 2, 1.0), UndefinedBoundError);
}

TEST(BoundUcb4MarkovPrecise, ZeroEpsReducesExactly) {
    GapStats g = gap_stats(std::vector<double>{0.375, 0.25});
    MarkovConstants c = chain_pair_constants();
    RngStream rng(321);
    for (int trial = 0; trial < 100; ++trial) {
        CostModel cost{rng.uniform01() * 2.0, rng.uniform01()};
        double T = 1.0 + rng.uniform01() * 1e6;
        double kappa = 701.0 + rng.uniform01() * 100.0;
        EXPECT_EQ(bound_ucb4_markov_precise(g, c, kappa, 0.0, cost, 2, T),
                  bound_ucb4_markov(g, c, kappa, cost.eval(0.0), 2, T));
    }
}

TEST(BoundUcb4MarkovPrecise, PoleGuard) {
    GapStats g = gap_stats(std::vector<double>{0.375, 0.25});
    MarkovConstants c = chain_pair_constants();
    CostModel cost{1.0, 0.0};
    EXPECT_THROW(bound_ucb4_markov_precise(g, c, 701.0, 0.125, cost, 2, 10.0),
                 UndefinedBoundError);
}

// ------------------------------------------------------------ decentralized

TEST(BoundDucb4, TimeOneConstantTerm) {
    GapStats g = gap_stats(demo_matrix());
    CostModel cost{1.0, 0.0};
    PrecisionRule f{false, 0.01};
    // T=1: (L gap_max + C) * NM(2M+1)
    double expect = (22.0 * g.gap_max + 1.0) * (2.0 * 2.0 * 5.0);
    EXPECT_NEAR(bound_ducb4(g, 2, 2, 0.01, 22, cost, f, 1.0), expect, 1e-12);
}

TEST(BoundDucb4, PoleGuardAtScaledEps) {
    GapStats g = gap_stats(demo_matrix());  // gap_min ~ 0.05
    CostModel cost{1.0, 0.0};
    PrecisionRule f{false, 0.02};
    // (M+1) eps = 0.06 >= 0.05
    EXPECT_THROW(bound_ducb4(g, 2, 2, 0.02, 22, cost, f, 100.0), UndefinedBoundError);
    EXPECT_NO_THROW(bound_ducb4(g, 2, 2, 0.01, 22, cost, f, 100.0));
}

TEST(BoundDucb4, PhysicalPrecisionFollowsFrameLength) {
    PrecisionRule f{true, 0.0};
    EXPECT_DOUBLE_EQ(f.eval(12, 2), std::pow(2.0, -5.0));  // J = 5
    EXPECT_DOUBLE_EQ(f.eval(4, 2), 0.5);                   // J = 1
    EXPECT_DOUBLE_EQ(f.eval(3, 2), 0.5);                   // floor clamps at 1
}

TEST(BoundDucb4Unknown, PrefixPlusTail) {
    GapStats g = gap_stats(demo_matrix());
    CostModel cost{1.0, 0.1};
    PrecisionRule f{true, 0.0};
    Schedule lt{ScheduleKind::FrameGrowth, 10.0};  // L_t = ceil(10 + ln(1+t))
    double T = 5000.0;
    double got = bound_ducb4_unknown(g, 2, 2, lt, cost, f, T);
    EXPECT_GT(got, 0.0);
    // eps_min = gap_min / 6; f(L_t) = 2^-floor((L_t-2)/2) shrinks as L_t grows
    Schedule frozen{ScheduleKind::Constant, 6.0};  // f(6) = 0.25 never reaches eps_min
    EXPECT_THROW(bound_ducb4_unknown(g, 2, 2, frozen, cost, f, T), UndefinedBoundError);
}

TEST(BoundDucb4Markov, ReferenceConstantsAndGuards) {
    MarkovArm c11 = two_state_chain(0.3, 0.5);
    MarkovArm c12 = two_state_chain(0.2, 0.6);
    MarkovArm c21 = two_state_chain(0.6, 0.3);
    MarkovArm c22 = two_state_chain(0.7, 0.2);
    ValueMatrix means(2, 2);
    means.at(0, 0) = chain_stats(c11).mean;
    means.at(0, 1) = chain_stats(c12).mean;
    means.at(1, 0) = chain_stats(c21).mean;
    means.at(1, 1) = chain_stats(c22).mean;
    GapStats g = gap_stats(means);
    MarkovConstants c = chain_grid_constants();
    CostModel cost{1.0, 0.0};
    PrecisionRule f{false, 0.01};

    double kappa = 934.0;
    // T=1: (L gap_max + C) * (2MD+1)MN + correction
    double expect = (22.0 * g.gap_max + 1.0) * ((2.0 * 2.0 * 9.0 + 1.0) * 2.0 * 2.0) + c.correction;
    EXPECT_NEAR(bound_ducb4_markov(g, 2, 2, 0.01, 22, kappa, c, cost, f, 1.0), expect, 1e-12);

    EXPECT_THROW(bound_ducb4_markov(g, 2, 2, 0.01, 22, 900.0, c, cost, f, 10.0),
                 UndefinedBoundError);
    double pole_eps = g.gap_min / 3.0 + 1e-9;
    EXPECT_THROW(bound_ducb4_markov(g, 2, 2, pole_eps, 22, kappa, c, cost, f, 10.0),
                 UndefinedBoundError);
}

// ------------------------------------------------------------ monotonicity

TEST(BoundMonotonicity, NondecreasingInTCAndL) {
    RngStream rng(777);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> means = {0.6 + 0.3 * rng.uniform01(), 0.3 * rng.uniform01()};
        GapStats g = gap_stats(means);
        double T1 = 2.0 + rng.uniform01() * 100.0;
        double T2 = T1 * (1.0 + rng.uniform01());
        double C1 = rng.uniform01();
        double C2 = C1 + rng.uniform01();
        int L1 = 1 + static_cast<int>(rng.uniform01() * 5);
        int L2 = L1 + 1 + static_cast<int>(rng.uniform01() * 5);

        EXPECT_LE(bound_ucb1_periodic(g, L1, T1), bound_ucb1_periodic(g, L1, T2));
        EXPECT_LE(bound_ucb1_periodic(g, L1, T1), bound_ucb1_periodic(g, L2, T1));
        EXPECT_LE(bound_ucb4(g, C1, 2, T1), bound_ucb4(g, C1, 2, T2));
        EXPECT_LE(bound_ucb4(g, C1, 2, T1), bound_ucb4(g, C2, 2, T1));
    }
}

TEST(BoundMonotonicity, DecentralizedInTMAndL) {
    GapStats g = gap_stats(demo_matrix());
    CostModel cost{1.0, 0.0};
    PrecisionRule f{false, 0.005};
    double prevT = 0.0;
    for (double T : {1.0, 10.0, 100.0, 1000.0, 1e5}) {
        double b = bound_ducb4(g, 2, 2, 0.005, 22, cost, f, T);
        EXPECT_GE(b, prevT);
        prevT = b;
    }
    EXPECT_LE(bound_ducb4(g, 2, 2, 0.005, 22, cost, f, 100.0),
              bound_ducb4(g, 2, 2, 0.005, 44, cost, f, 100.0));
    EXPECT_LE(bound_ducb4(g, 2, 2, 0.005, 22, cost, f, 100.0),
              bound_ducb4(g, 3, 3, 0.005, 22, cost, f, 100.0));
}

TEST(BoundEvaluators, PureFunctions) {
    GapStats g = gap_stats(demo_matrix());
    CostModel cost{1.3, 0.2};
    PrecisionRule f{false, 0.004};
    double a = bound_ducb4(g, 2, 2, 0.004, 20, cost, f, 31415.0);
    double b = bound_ducb4(g, 2, 2, 0.004, 20, cost, f, 31415.0);
    EXPECT_EQ(a, b);
}
