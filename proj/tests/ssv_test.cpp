#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "robust/ssv.hpp"
#include "test_util.hpp"

using namespace robust;

namespace {

// min over d > 0 of sigma_max(diag(d,1) M diag(1/d,1)) on a log grid.
double diagonal_scan(const CMatrix& m, int points = 100000) {
    double best = max_singular_value(m);
    for (int i = 0; i < points; ++i) {
        const double d = std::pow(10.0, -6.0 + 12.0 * i / (points - 1));
        CMatrix s = m;
        s(0, 1) *= d;
        s(1, 0) /= d;
        best = std::min(best, max_singular_value(s));
    }
    return best;
}

double spectral_radius(const CMatrix& m) {
    return Eigen::ComplexEigenSolver<CMatrix>(m).eigenvalues().cwiseAbs().maxCoeff();
}

BlockStructure two_scalars() { return BlockStructure({UncertaintyBlock::full(1), UncertaintyBlock::full(1)}); }

}  // namespace

TEST(Ssv, SingleFullBlockIsMaxSingularValue) {
    std::mt19937 rng(1);
    for (int n = 2; n <= 6; ++n) {
        const CMatrix m = testutil::random_complex(rng, n, n);
        const auto r = ssv_upper_point(m, BlockStructure({UncertaintyBlock::full(n)}));
        EXPECT_NEAR(r.mu, max_singular_value(m), 1e-4 * max_singular_value(m));
    }
}

TEST(Ssv, NilpotentScaledToZero) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 1) = 1.0;
    SsvOptions o;
    EXPECT_LE(ssv_upper_point(m, two_scalars(), o).mu, o.bisect_tol);
}

TEST(Ssv, FixedInstanceMatchesScan) {
    CMatrix m(2, 2);
    m << 1, 2, 3, 4;
    const double oracle = diagonal_scan(m);
    const double mu = ssv_upper_point(m, two_scalars()).mu;
    // d = sqrt(3/2) symmetrizes M, so the infimum is rho(M) = (5 + sqrt(33)) / 2.
    EXPECT_NEAR(mu, 0.5 * (5.0 + std::sqrt(33.0)), 1e-3);
    EXPECT_NEAR(mu, oracle, 1e-3 * oracle);
}

TEST(Ssv, RandomTwoByTwoMatchesScan) {
    std::mt19937 rng(2);
    for (int trial = 0; trial < 8; ++trial) {
        const CMatrix m = testutil::random_complex(rng, 2, 2);
        const double oracle = diagonal_scan(m, 20000);
        EXPECT_NEAR(ssv_upper_point(m, two_scalars()).mu, oracle, 1e-3 * oracle) << m;
    }
}

TEST(Ssv, Sandwich) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 3;
        const CMatrix m = testutil::random_complex(rng, n, n);
        const double mu = ssv_upper_point(m, BlockStructure({UncertaintyBlock::repeated(n)})).mu;
        EXPECT_GE(mu, spectral_radius(m) - 1e-3);
        EXPECT_LE(mu, max_singular_value(m) + 1e-3);
        const double mixed =
            ssv_upper_point(m, BlockStructure({UncertaintyBlock::repeated(1), UncertaintyBlock::full(n - 1)})).mu;
        EXPECT_LE(mixed, max_singular_value(m) + 1e-3);
    }
}

TEST(Ssv, HomogeneousAndScalingInvariant) {
    std::mt19937 rng(4);
    const BlockStructure s({UncertaintyBlock::repeated(2), UncertaintyBlock::full(1), UncertaintyBlock::full(1)});
    SsvOptions o;
    for (int trial = 0; trial < 5; ++trial) {
        const CMatrix m = testutil::random_complex(rng, 4, 4);
        const double mu = ssv_upper_point(m, s, o).mu;
        const Complex alpha(-1.5, 2.0);
        EXPECT_NEAR(ssv_upper_point(CMatrix(alpha * m), s, o).mu, std::abs(alpha) * mu,
                    2 * o.bisect_tol * std::abs(alpha) * mu);
        // Structured similarity D0 M D0^-1.
        CMatrix d0 = CMatrix::Identity(4, 4);
        const CMatrix h = testutil::random_complex(rng, 2, 2);
        d0.topLeftCorner(2, 2) = h * h.adjoint() + CMatrix::Identity(2, 2);
        d0(2, 2) = 3.0;
        d0(3, 3) = 0.2;
        const CMatrix similar = d0 * m * d0.inverse();
        EXPECT_NEAR(ssv_upper_point(similar, s, o).mu, mu, 2 * o.bisect_tol * mu);
    }
}

TEST(Ssv, ScalesCertifyBoundAndCommute) {
    std::mt19937 rng(5);
    const BlockStructure s({UncertaintyBlock::repeated(2), UncertaintyBlock::full(2), UncertaintyBlock::full(1)});
    const auto g = testutil::random_stable(rng, 3, 5, 5);
    const auto grid = FrequencyGrid::logspace(0.1, 10, 6);
    SsvOptions o;
    const auto r = ssv_upper(freq_response(g, grid), s, o);
    ASSERT_EQ(r.mu_upper.size(), grid.size());
    ASSERT_EQ(r.d_scales.scales.size(), grid.size());
    const auto fr = freq_response(g, grid);
    double peak = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const CMatrix& d = r.d_scales.scales[i];
        EXPECT_LE((d - d.adjoint()).norm(), 1e-10 * d.norm());
        EXPECT_GT(Eigen::SelfAdjointEigenSolver<CMatrix>(d).eigenvalues().minCoeff(), 0.0);
        EXPECT_LE(scaled_gain(fr.values[i], d), r.mu_upper[i] * (1 + 10 * o.bisect_tol));
        EXPECT_NEAR(d(4, 4).real(), 1.0, 1e-12);
        // Commutes with a random structured perturbation.
        CMatrix delta = CMatrix::Zero(5, 5);
        delta.topLeftCorner(2, 2) = Complex(0.3, -1.1) * CMatrix::Identity(2, 2);
        delta.block(2, 2, 2, 2) = testutil::random_complex(rng, 2, 2);
        delta(4, 4) = Complex(0.7, 0.2);
        EXPECT_LE((d * delta - delta * d).norm(), 1e-10 * d.norm());
        peak = std::max(peak, r.mu_upper[i]);
    }
    EXPECT_EQ(r.peak, peak);
    EXPECT_EQ(r.peak_omega, grid[r.peak_index]);
}

TEST(Ssv, RepeatedOnlyNormalizesTrace) {
    std::mt19937 rng(6);
    const BlockStructure s({UncertaintyBlock::repeated(1), UncertaintyBlock::repeated(2)});
    const auto p = ssv_upper_point(testutil::random_complex(rng, 3, 3), s);
    EXPECT_NEAR(p.d.trace().real(), 3.0, 1e-10);
}

TEST(Ssv, NonSquarePerformanceBlockIsPadded) {
    const BlockStructure s({UncertaintyBlock::full(1), UncertaintyBlock::full(2, 1)});
    EXPECT_EQ(s.total_dim(), 3);
    EXPECT_EQ(s.z_dim(), 3);
    EXPECT_EQ(s.w_dim(), 2);
    CMatrix m(3, 2);
    m << 1, 2, 3, 4, 5, 6;
    const CMatrix p = pad_to_structure(m, s);
    ASSERT_EQ(p.rows(), 3);
    EXPECT_EQ(p(0, 0), Complex(1));
    EXPECT_EQ(p(2, 1), Complex(6));
    EXPECT_EQ(p.col(2).norm(), 0.0);
    EXPECT_THROW(pad_to_structure(CMatrix::Zero(2, 2), s), Error);
}

TEST(Ssv, RobustStabilityVerdict) {
    const auto grid = FrequencyGrid::logspace(0.1, 1, 3);
    const BlockStructure s({UncertaintyBlock::full(2)});
    for (double level : {0.5, 2.0}) {
        FrequencyResponseData clp{grid, std::vector<CMatrix>(3, CMatrix(level * CMatrix::Identity(2, 2)))};
        const auto r = assess_robust_stability(clp, s);
        EXPECT_EQ(r.robust, level < 1.0);
        EXPECT_NEAR(r.margin, level, 1e-12);
    }
}

TEST(Ssv, RejectsBadStructures) {
    EXPECT_THROW(BlockStructure(std::vector<UncertaintyBlock>{}), Error);
    EXPECT_THROW(UncertaintyBlock::full(0), Error);
    EXPECT_THROW(ssv_upper_point(CMatrix::Identity(3, 3), two_scalars()), Error);
}
