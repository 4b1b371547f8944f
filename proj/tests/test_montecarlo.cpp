#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace holo_rmt;
using holo_rmt::test::iid_model;
using holo_rmt::test::random_complex;
using holo_rmt::test::random_model;

namespace {

double mi_by_eigenvalues(const ComplexMatrix& h, double zeta) {
    const ComplexMatrix g = h * h.adjoint();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(g, Eigen::EigenvaluesOnly);
    return (1.0 + es.eigenvalues().array() / zeta).log().sum();
}

}  // namespace

TEST(GaussianStream, MomentsAndReproducibility) {
    GaussianStream g(42, 0);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = g.standard_normal();
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    EXPECT_NEAR(s1 / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s4 / n, 3.0, 5.0 * std::sqrt(96.0 / n));
    GaussianStream a(7, 3), b(7, 3), c(7, 4);
    const double xa = a.standard_normal();
    EXPECT_EQ(xa, b.standard_normal());
    EXPECT_NE(xa, c.standard_normal());
}

TEST(ComputeMi, MatchesEigenvalueSum) {
    for (auto [n, m] : {std::pair<int, int>{5, 5}, {3, 8}, {9, 4}}) {
        const ComplexMatrix h = random_complex(n, m, static_cast<std::uint64_t>(n * 10 + m));
        for (double zeta : {0.01, 1.0, 30.0}) {
            EXPECT_NEAR(compute_mi(h, zeta), mi_by_eigenvalues(h, zeta), 1e-11 * (1.0 + mi_by_eigenvalues(h, zeta)));
        }
    }
    EXPECT_EQ(compute_mi(ComplexMatrix::Zero(3, 2), 1.0), 0.0);
    EXPECT_THROW(compute_mi(ComplexMatrix::Zero(3, 2), 0.0), DomainError);
}

TEST(SampleChannel, EntryVariancesFollowProfile) {
    RealMatrix s(2, 3);
    s << 0.5, 1.0, 2.0, 4.0, 0.25, 1.5;
    ComplexMatrix a = ComplexMatrix::Zero(2, 3);
    a(1, 2) = Complex(0.3, -0.2);
    const auto model = build_weichselberger(a, VarianceProfile::from_matrix(s), 1.0);
    const int n = 40000;
    RealMatrix acc = RealMatrix::Zero(2, 3);
    ComplexMatrix mean = ComplexMatrix::Zero(2, 3);
    for (int k = 0; k < n; ++k) {
        GaussianStream g(5, static_cast<std::uint64_t>(k));
        const ComplexMatrix h = sample_channel(model, g);
        mean += h;
        acc += (h - a).cwiseAbs2();
    }
    mean /= n;
    acc /= n;
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) {
            const double v = s(i, j) / 3.0;
            EXPECT_NEAR(acc(i, j), v, 5.0 * v / std::sqrt(n));
            EXPECT_NEAR(std::abs(mean(i, j) - a(i, j)), 0.0, 5.0 * std::sqrt(v / n));
        }
}

TEST(RunMc, ScalarRayleighMean) {
    // |h|^2 ~ Exp(1): E log(1 + |h|^2) = e E1(1).
    const auto set = run_mc(iid_model(1, 1, 1.0), 40000, 3);
    EXPECT_NEAR(set.mean(), 0.5963473623231940, 4.0 * *set.standard_error());
}

TEST(RunMc, ThreadCountAndPartitionDoNotChangeSamples) {
    const auto model = random_model(4, 3, 1, 0.5, 1.0);
    const auto one = run_mc(model, 64, 9, 0, 1);
    const auto four = run_mc(model, 64, 9, 0, 4);
    EXPECT_EQ(one.samples(), four.samples());
    const auto head = run_mc(model, 40, 9, 0, 2);
    const auto tail = run_mc(model, 24, 9, 40, 3);
    EXPECT_EQ(head.merged(tail).samples(), one.samples());
    EXPECT_THROW(head.merged(run_mc(model, 24, 9, 41)), DomainError);
    EXPECT_THROW(head.merged(run_mc(model, 24, 10, 40)), DomainError);
    EXPECT_NE(run_mc(model, 8, 10).samples(), run_mc(model, 8, 9).samples());
}

TEST(RunMc, SampleStatistics) {
    const MiSampleSet s({1.0, 2.0, 4.0}, 0, 0);
    EXPECT_DOUBLE_EQ(s.mean(), 7.0 / 3.0);
    EXPECT_DOUBLE_EQ(*s.variance(), (16.0 / 9.0 + 1.0 / 9.0 + 25.0 / 9.0) / 2.0);
    EXPECT_DOUBLE_EQ(*s.standard_error(), std::sqrt(*s.variance() / 3.0));
    EXPECT_FALSE(MiSampleSet({1.0}, 0, 0).variance().has_value());
    EXPECT_THROW(MiSampleSet().mean(), DomainError);
    EXPECT_THROW(run_mc(iid_model(1, 1, 1.0), 0, 1), DomainError);
}

TEST(ModelDigest, SensitiveToEveryInput) {
    auto model = random_model(3, 3, 2, 0.5, 1.0);
    const auto d0 = model_digest(model);
    EXPECT_EQ(d0, model_digest(model));
    model.zeta = 0.50000001;
    EXPECT_NE(d0, model_digest(model));
    model = random_model(3, 3, 2, 0.5, 1.0);
    model.los(1, 1) += 1e-12;
    EXPECT_NE(d0, model_digest(model));
}

TEST(Ks, SinglePointAndShift) {
    EXPECT_DOUBLE_EQ(ks_statistic({0.0}), 0.5);
    EXPECT_NEAR(ks_statistic({-1.0, 1.0}), std::max(normal_cdf(-1.0), 0.5 - normal_cdf(-1.0)), 1e-15);
    std::vector<double> x(20000);
    GaussianStream g(1, 0, StreamTag::test_data);
    for (auto& v : x) v = g.standard_normal();
    EXPECT_LT(ks_statistic(x) * std::sqrt(20000.0), 1.95);
    for (auto& v : x) v += 0.1;
    EXPECT_NEAR(ks_statistic(x), normal_cdf(0.1) - 0.5, 0.015);
    EXPECT_THROW(ks_statistic({}), DomainError);
}

TEST(Qq, SlopeOfExactAndScaledQuantiles) {
    std::vector<double> x(1000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = normal_quantile((static_cast<double>(i) + 0.5) / 1000.0);
    const auto qq = qq_data(x);
    EXPECT_NEAR(qq_slope(qq), 1.0, 1e-14);
    for (auto& v : x) v = 2.0 * v + 3.0;
    EXPECT_NEAR(qq_slope(qq_data(x)), 2.0, 1e-13);
    EXPECT_THROW(qq_slope({}), DomainError);
}

TEST(Outage, EmpiricalCountsStrictlyBelow) {
    const MiSampleSet s({1.0, 2.0, 2.0, 3.0}, 0, 0);
    EXPECT_EQ(empirical_outage(s, 2.0), 0.25);
    EXPECT_EQ(empirical_outage(s, 2.5), 0.75);
    EXPECT_EQ(empirical_outage(s, 10.0), 1.0);
    AsymptoticStats st;
    st.emi = 2.0;
    st.variance = 1e-12;
    EXPECT_NEAR(outage_sup_deviation(s, st, {0.0, 1.5, 2.5, 4.0}), 0.25, 1e-12);
}

TEST(McVersusDeterministicEquivalent, SpreadProfile) {
    const auto model = random_model(16, 16, 30, 0.1, 1.0);
    const auto fa = analyze_model(model);
    const auto set = run_mc(model, 6000, 4);
    EXPECT_NEAR(set.mean(), fa.stats.emi, 5.0 * *set.standard_error());
    EXPECT_NEAR(*set.variance() / fa.stats.variance, 1.0, 0.12);
    const auto z = normalized_samples(set, fa.stats);
    EXPECT_LT(ks_statistic(z), 0.05);
}
