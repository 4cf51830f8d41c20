#include <gtest/gtest.h>

#include <random>

#include "robust/hinf.hpp"
#include "test_util.hpp"

using namespace robust;

namespace {

void expect_achieves(const GeneralizedPlant& p, const SynthesisResult& r) {
    EXPECT_EQ(r.controller.outputs(), p.n_u);
    EXPECT_EQ(r.controller.inputs(), p.n_y);
    const auto cl = lft_lower(p, r.controller);
    EXPECT_TRUE(is_stable(cl));
    EXPECT_LE(hinf_norm(cl), r.gamma * (1 + 1e-3));
}

}  // namespace

TEST(Hinf, StaticCancellation) {
    // z = w + u, y = w.
    Matrix d(2, 2);
    d << 1, 1, 1, 0;
    const GeneralizedPlant p(StateSpace::gain(d), 1, 1, 1, 1);
    const auto r = hinf_syn_lmi(p);
    EXPECT_LE(r.gamma, 1e-3);
    EXPECT_NEAR(dc_gain(r.controller)(0, 0), -1.0, 1e-2);
    expect_achieves(p, r);
    const auto b = hinf_syn_lmi_bisect(p);
    EXPECT_LE(b.gamma, 1e-3);
}

TEST(Hinf, NoActuationGivesOpenLoopNorm) {
    std::mt19937 rng(3);
    const auto g = testutil::random_stable(rng, 3, 2, 2);
    Matrix B(3, 2);
    B << g.B.col(0), Matrix::Zero(3, 1);
    Matrix D = g.D;
    D(0, 1) = 0.0;
    const GeneralizedPlant p(StateSpace(g.A, B, g.C, D), 1, 1, 1, 1);
    const auto r = hinf_syn_lmi(p);
    const StateSpace p11(g.A, g.B.col(0), g.C.row(0), g.D.block(0, 0, 1, 1));
    EXPECT_NEAR(r.gamma, hinf_norm(p11), 0.01 * hinf_norm(p11));
    expect_achieves(p, r);
}

TEST(Hinf, MixedSensitivityDirectAndBisectAgree) {
    const auto p = testutil::mixed_sensitivity_plant();
    const auto direct = hinf_syn_lmi(p);
    expect_achieves(p, direct);
    HinfBisectOptions fine;
    fine.bisect_tol = 1e-6;
    const auto oracle = hinf_syn_lmi_bisect(p, fine);
    expect_achieves(p, oracle);
    EXPECT_NEAR(direct.gamma, oracle.gamma, 0.02 * oracle.gamma);
    // The loop cannot do better than the weighted sensitivity allows at high frequency.
    EXPECT_GT(direct.gamma, 0.5 * 0.99);
}

TEST(Hinf, RandomPlantsAchieveBound) {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 4; ++trial) {
        const int n = 1 + trial % 4;
        const auto p = testutil::random_plant(rng, n, 2, 1, 2, 1);
        const auto r = hinf_syn_lmi(p);
        expect_achieves(p, r);
    }
}

TEST(Hinf, FeedthroughIsLoopShifted) {
    auto p = testutil::mixed_sensitivity_plant();
    p.ss.D(2, 1) = 0.4;
    const auto r = hinf_syn_lmi(p);
    expect_achieves(p, r);
}

TEST(Hinf, WeightScalingIsMonotone) {
    auto p = testutil::mixed_sensitivity_plant();
    const double g1 = hinf_syn_lmi(p).gamma;
    p.ss.C.row(0) *= 2.0;
    p.ss.D.row(0) *= 2.0;
    EXPECT_GE(hinf_syn_lmi(p).gamma, g1 * (1 - 1e-3));
}

TEST(Hinf, Preconditions) {
    // Unstable mode invisible to u.
    Matrix A(1, 1), B(1, 2), C(2, 1), D = Matrix::Zero(2, 2);
    A << 1;
    B << 1, 0;
    C << 1, 1;
    try {
        hinf_syn_lmi(GeneralizedPlant(StateSpace(A, B, C, D), 1, 1, 1, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotStabilizable);
    }
    B << 1, 1;
    C << 1, 0;
    try {
        hinf_syn_lmi(GeneralizedPlant(StateSpace(A, B, C, D), 1, 1, 1, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotDetectable);
    }
    const auto p = testutil::mixed_sensitivity_plant();
    try {
        GeneralizedPlant(p.ss, 1, 1, 1, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
}

TEST(Hinf, BisectionRecoversFromLowBracket) {
    const auto p = testutil::mixed_sensitivity_plant();
    HinfBisectOptions o;
    o.gamma_hi = 1e-3;
    const auto r = hinf_syn_lmi_bisect(p, o);
    expect_achieves(p, r);
}
