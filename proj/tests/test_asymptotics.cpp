#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace holo_rmt;
using holo_rmt::test::iid_model;
using holo_rmt::test::random_complex;
using holo_rmt::test::random_model;
using holo_rmt::test::random_profile;
using holo_rmt::test::random_unitary;

namespace {

double iid_delta(double zeta) { return (-1.0 + std::sqrt(1.0 + 4.0 / zeta)) / 2.0; }

}  // namespace

TEST(Emi, ScalarCase) {
    const auto fa = analyze_model(iid_model(1, 1, 1.0));
    EXPECT_NEAR(fa.stats.emi, 0.5804576388690827, 1e-12);
}

TEST(Emi, SquareIidClosedForm) {
    for (double zeta : {0.05, 0.5, 3.0}) {
        const int n = 7;
        const auto fa = analyze_model(iid_model(n, n, zeta));
        const double d = iid_delta(zeta);
        EXPECT_NEAR(fa.stats.emi, n * (2.0 * std::log1p(d) - zeta * d * d), 1e-10);
    }
}

TEST(Emi, HighNoiseLimitIsMeanPowerOverZeta) {
    // First-order term of log det(I + H H^H / zeta); the next term is O(power / zeta).
    const auto model0 = random_model(5, 4, 3, 1e5, 1.3);
    const double power = model0.profile.total() / 4.0 + model0.los.squaredNorm();
    const auto fa = analyze_model(model0);
    EXPECT_NEAR(fa.stats.emi / (power / 1e5), 1.0, 1e-4);
}

TEST(Emi, DerivativeInRhoIsTraceOfT) {
    auto model = random_model(6, 5, 4, 0.3, 1.2);
    const double h = 1e-5;
    model.zeta = 0.3 + h;
    const double up = analyze_model(model).stats.emi;
    model.zeta = 0.3 - h;
    const double down = analyze_model(model).stats.emi;
    model.zeta = 0.3;
    const auto fa = analyze_model(model);
    const double trace = fa.resolvents.T.trace().real();
    EXPECT_NEAR((up - down) / (2.0 * h), trace - 6.0 / 0.3, 1e-7 * 6.0 / 0.3);
}

TEST(Emi, NonNegativeAndIncreasingInSnr) {
    auto model = random_model(4, 6, 5, 1.0, 1.0);
    double prev = 0.0;
    for (double z : {10.0, 1.0, 0.1, 0.01}) {
        model.zeta = z;
        const double c = analyze_model(model).stats.emi;
        EXPECT_GT(c, prev);
        prev = c;
    }
}

TEST(BMatrixBlocks, MatchExplicitSums) {
    const auto model = random_model(5, 4, 6, 0.2, 1.5);
    const auto fa = analyze_model(model);
    const auto& s = model.profile.values();
    const auto& t = fa.resolvents.T;
    const auto& a = model.los;
    const auto& d = fa.stats.solution.delta;
    const Eigen::Index n = 5, m = 4;
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index k = 0; k < m; ++k) {
            double pi = 0.0, gamma = 0.0;
            Complex xi = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                Complex ta = 0.0;
                for (Eigen::Index q = 0; q < n; ++q) ta += t(i, q) * a(q, k);
                pi += s(i, j) * std::norm(ta);
                xi += std::conj(a(i, j)) * ta;
                for (Eigen::Index q = 0; q < n; ++q) gamma += s(i, j) * std::norm(t(i, q)) * s(q, k);
            }
            pi /= m * (1.0 + d(k)) * (1.0 + d(k));
            const double xi_v = j == k ? 0.0 : std::norm(xi) / std::pow((1.0 + d(j)) * (1.0 + d(k)), 2);
            gamma /= m * m;
            EXPECT_NEAR(fa.b.pi(j, k), pi, 1e-13 * (1.0 + pi));
            EXPECT_NEAR(fa.b.xi(j, k), xi_v, 1e-13 * (1.0 + xi_v));
            EXPECT_NEAR(fa.b.gamma(j, k), gamma, 1e-13 * (1.0 + gamma));
        }
    for (Eigen::Index j = 0; j < m; ++j) {
        const double tt = fa.resolvents.tt_diag(j);
        EXPECT_NEAR(fa.b.lambda_tilde(j), std::pow(model.zeta * tt, 2), 1e-15);
        EXPECT_NEAR(fa.b.b(m + j, j), fa.b.xi(j, j) + fa.b.lambda_tilde(j), 0.0);
    }
    EXPECT_TRUE(fa.b.b.bottomRightCorner(m, m) == fa.b.pi.transpose());
}

TEST(Variance, SquareIidClosedForm) {
    for (double zeta : {0.05, 1.0, 4.0}) {
        const auto fa = analyze_model(iid_model(6, 6, zeta));
        const double d = iid_delta(zeta);
        EXPECT_NEAR(fa.stats.variance, -std::log1p(-zeta * zeta * std::pow(d, 4)), 1e-12);
    }
}

TEST(Variance, CenteredReductionAgrees) {
    const auto model = random_model(6, 8, 7, 0.1, 0.0);
    const auto fa = analyze_model(model);
    EXPECT_TRUE(fa.b.pi.isZero(0.0));
    EXPECT_TRUE(fa.b.xi.isZero(0.0));
    EXPECT_NEAR(fa.stats.variance, variance_centered_reduction(fa.b), 1e-12 * fa.stats.variance);
}

TEST(Variance, ZeroBGivesZero) {
    const auto bm = BMatrix::assemble(RealMatrix::Zero(3, 3), RealMatrix::Zero(3, 3), RealMatrix::Zero(3, 3),
                                      RealVector::Zero(3));
    EXPECT_EQ(variance_clt(bm), 0.0);
}

TEST(Variance, NonPositiveDeterminantIsInvalidRegime) {
    const auto bm = BMatrix::assemble(RealMatrix::Zero(1, 1), RealMatrix::Zero(1, 1), RealMatrix::Constant(1, 1, 2.0),
                                      RealVector::Constant(1, 2.0));
    EXPECT_THROW(variance_clt(bm), InvalidRegimeError);
    EXPECT_THROW(BMatrix::assemble(RealMatrix::Zero(2, 2), RealMatrix::Zero(1, 1), RealMatrix::Zero(2, 2),
                                   RealVector::Zero(2)),
                 ShapeError);
}

TEST(Variance, InvariantUnderUnitaryRotationOfLosForFlatProfile) {
    const ComplexMatrix a = random_complex(6, 5, 8, 0.3);
    const auto flat = VarianceProfile::from_matrix(RealMatrix::Constant(6, 5, 0.8));
    const auto base = analyze_model(build_weichselberger(a, flat, 0.2));
    const ComplexMatrix rotated = random_unitary(6, 9) * a * random_unitary(5, 10);
    const auto rot = analyze_model(build_weichselberger(rotated, flat, 0.2));
    EXPECT_NEAR(rot.stats.emi, base.stats.emi, 1e-10);
    EXPECT_NEAR(rot.stats.variance, base.stats.variance, 1e-10);
}

TEST(Variance, PositiveForRandomModels) {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        const auto fa = analyze_model(random_model(5, 7, seed, 0.05, 2.0));
        EXPECT_GT(fa.stats.variance, 0.0);
        EXPECT_TRUE(std::isfinite(fa.stats.variance));
    }
}

TEST(LinearSystemOracle, SingleTransmitterCase) {
    const auto model = random_model(4, 1, 11, 0.3, 0.0);
    const auto fa = analyze_model(model);
    const double gl = fa.b.gamma(0, 0) * fa.b.lambda_tilde(0);
    const double oracle = variance_linear_system_oracle(model, fa.stats.solution, fa.resolvents);
    EXPECT_NEAR(oracle, gl / (1.0 - gl), 1e-14);
    EXPECT_NEAR(fa.stats.variance, -std::log1p(-gl), 1e-14);
}

TEST(LinearSystemOracle, GapShrinksWithDimension) {
    double prev = 1.0;
    for (Eigen::Index m : {8, 16, 32}) {
        const auto model = random_model(m, m, 12, 0.5, 1.0);
        const auto fa = analyze_model(model);
        const double oracle = variance_linear_system_oracle(model, fa.stats.solution, fa.resolvents);
        const double gap = std::abs(oracle - fa.stats.variance) / fa.stats.variance;
        EXPECT_LT(gap, prev) << m;
        prev = gap;
    }
    EXPECT_LT(prev, 0.05);
}

TEST(LogDet, MatchesDeterminant) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const RealMatrix a = random_profile(4, 4, seed, -1.0, 1.0);
        const double det = a.determinant();
        const auto ld = log_det(a);
        EXPECT_EQ(ld.sign, det > 0 ? 1 : -1);
        EXPECT_NEAR(ld.log_abs, std::log(std::abs(det)), 1e-12);
    }
    EXPECT_EQ(log_det(RealMatrix::Zero(2, 2)).sign, 0);
}

TEST(Outage, GaussianTailAndSymmetry) {
    AsymptoticStats st;
    st.emi = 10.0;
    st.variance = 4.0;
    EXPECT_DOUBLE_EQ(outage_probability(st, 10.0), 0.5);
    EXPECT_NEAR(outage_probability(st, 10.0 - 12.0), 9.8658764503769814e-10, 1e-12 * 9.8658764503769814e-10);
    for (double x : {0.3, 1.0, 2.5, 7.0}) {
        EXPECT_NEAR(outage_probability(st, 10.0 + x) + outage_probability(st, 10.0 - x), 1.0, 1e-15);
    }
    double prev = 0.0;
    for (double r = 0.0; r < 20.0; r += 0.5) {
        const double p = outage_probability(st, r);
        EXPECT_GE(p, prev);
        prev = p;
    }
    st.variance = 0.0;
    EXPECT_THROW(outage_probability(st, 1.0), DomainError);
}

TEST(Outage, AutoRateGrid) {
    AsymptoticStats st;
    st.emi = 3.0;
    st.variance = 0.25;
    const auto g = auto_rate_grid(st);
    ASSERT_EQ(g.size(), 101u);
    EXPECT_NEAR(g.front(), 0.5, 1e-14);
    EXPECT_NEAR(g.back(), 5.5, 1e-14);
    EXPECT_NEAR(g[50], 3.0, 1e-14);
}
