#include <cmath>

#include <gtest/gtest.h>

#include <kdsim/fmo.hpp>
#include <kdsim/measurement.hpp>

#include "test_util.hpp"

using namespace kdsim;
using kdsim::testing::Gen;

namespace {

ComplexMatrix sigma_z() {
    ComplexMatrix z = ComplexMatrix::Zero(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    return z;
}

KrausSet fmo_kraus(double dt_au) {
    return kraus_from_lindblad(fmo::build_fmo_model(), dt_au * kFsPerAtomicUnit, true);
}

RealVector dense_diagonal(const std::vector<TermProduct> &terms, const InitialEnsemble &e) {
    return sum_terms(terms, pure_state_density(e)).populations();
}

} // namespace

TEST(SimulateExact, MatchesDenseProduct) {
    Gen gen(51);
    const ComplexMatrix m = gen.contraction(3);
    const DilatedUnitary u = dilate(m);
    const StateVector v = gen.state(3);
    const StateVector out = simulate_exact(u, embed_state(v));
    EXPECT_LT((out.head(3) - m * v).norm(), 1e-14);
    EXPECT_NEAR(out.norm(), 1.0, 1e-12);
    EXPECT_THROW(simulate_exact(u, v), Error);
}

TEST(SampleCounts, DeterministicOutcome) {
    const auto rec = sample_counts(linalg::basis_state(4, 0), 100, 3);
    EXPECT_EQ(rec.count(0), 100u);
    EXPECT_EQ(rec.counts.size(), 1u);
    EXPECT_EQ(rec.shots, 100u);
    EXPECT_DOUBLE_EQ(rec.subspace_frequency(2), 1.0);
}

TEST(SampleCounts, BinomialSpread) {
    StateVector plus(2);
    plus << std::sqrt(0.5), std::sqrt(0.5);
    int inside = 0;
    const int seeds = 400;
    for (int s = 0; s < seeds; ++s) {
        const auto rec = sample_counts(plus, kDefaultShots, static_cast<std::uint64_t>(s));
        EXPECT_EQ(rec.count(0) + rec.count(1), kDefaultShots);
        const double c = static_cast<double>(rec.count(0));
        inside += std::abs(c - 4608.0) <= 144.0;
    }
    EXPECT_GE(inside, static_cast<int>(0.99 * seeds));
}

TEST(SampleCounts, SeedDeterminism) {
    Gen gen(52);
    const StateVector v = gen.state(6);
    const auto a = sample_counts(v, 5000, 99);
    const auto b = sample_counts(v, 5000, 99);
    const auto c = sample_counts(v, 5000, 100);
    EXPECT_EQ(a.counts, b.counts);
    EXPECT_NE(a.counts, c.counts);
}

TEST(SampleCounts, Errors) {
    EXPECT_THROW(sample_counts(2.0 * linalg::basis_state(2, 0), 10, 0), Error);
    EXPECT_THROW(sample_counts(linalg::basis_state(2, 0), 0, 0), Error);
}

TEST(EstimateDiagonal, ExactMatchesDenseChannel) {
    Gen gen(53);
    for (int trial = 0; trial < 10; ++trial) {
        const KrausSet ks = kraus_from_lindblad(gen.lindblad(4, 3), 6.0, true);
        PruningPolicy policy;
        policy.norm_threshold = 0.0;
        const auto terms = enumerate_products(ks, 3, policy);
        const InitialEnsemble e(
            {{0.25, gen.state(4)}, {0.75, gen.state(4)}});
        const RealVector got = estimate_diagonal(terms, e, 1, 0, EstimationMode::exact);
        EXPECT_LT((got - dense_diagonal(terms, e)).norm(), 1e-12);
    }
}

TEST(EstimateDiagonal, AmplitudeDampingExcitedPopulation) {
    const double p = 0.1;
    const KrausSet ks = damping_channel(p, 0.0);
    PruningPolicy policy;
    policy.norm_threshold = 0.0;
    const InitialEnsemble e = InitialEnsemble::basis(2, 1);
    for (std::size_t s = 1; s <= 5; ++s) {
        const auto terms = enumerate_products(ks, s, policy);
        const RealVector d = estimate_diagonal(terms, e, 1, 0, EstimationMode::exact);
        EXPECT_NEAR(d(1), std::pow(1.0 - p, static_cast<double>(s)), 1e-14);
        EXPECT_NEAR(d(0) + d(1), 1.0, 1e-14);
    }
}

TEST(EstimateDiagonal, SampledFmoStepWithinTolerance) {
    const auto terms = enumerate_products(fmo_kraus(400.0), 1, PruningPolicy{});
    const InitialEnsemble e = InitialEnsemble::basis(5, 1);
    const RealVector exact = estimate_diagonal(terms, e, 1, 0, EstimationMode::exact);
    int good = 0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
        const RealVector sampled = estimate_diagonal(terms, e, kDefaultShots,
                                                     static_cast<std::uint64_t>(s),
                                                     EstimationMode::sampled);
        good += (sampled - exact).cwiseAbs().maxCoeff() <= 0.03;
    }
    EXPECT_GE(good, static_cast<int>(0.95 * seeds));
}

TEST(EstimateDiagonal, SampledIsDeterministic) {
    const auto terms = enumerate_products(fmo_kraus(2000.0), 3, PruningPolicy{});
    const InitialEnsemble e = InitialEnsemble::basis(5, 1);
    const RealVector a = estimate_diagonal(terms, e, 512, 17, EstimationMode::sampled);
    const RealVector b = estimate_diagonal(terms, e, 512, 17, EstimationMode::sampled);
    EXPECT_EQ(a, b);
}

TEST(EstimateDiagonal, DimensionMismatch) {
    EXPECT_THROW(estimate_diagonal(identity_terms(3), InitialEnsemble::basis(2, 0), 1, 0,
                                   EstimationMode::exact),
                 Error);
}

TEST(ShiftObservable, PauliZ) {
    const ObservableSpec spec = shift_observable(sigma_z());
    EXPECT_DOUBLE_EQ(spec.norm, 1.0);
    EXPECT_LT((spec.shifted - linalg::basis_op(2, 0, 0)).norm(), 1e-15);
    EXPECT_LT((spec.factor * spec.factor.adjoint() - spec.shifted).norm(), 1e-15);
}

TEST(ShiftObservable, IdentityAndZero) {
    const ObservableSpec spec = shift_observable(linalg::identity(3));
    EXPECT_LT((spec.shifted - linalg::identity(3)).norm(), 1e-15);
    try {
        shift_observable(ComplexMatrix::Zero(2, 2));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroObservable);
    }
}

TEST(ShiftObservable, SpectrumInUnitInterval) {
    const ObservableSpec spec = shift_observable(fmo::default_hamiltonian());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(spec.shifted);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    EXPECT_LE(es.eigenvalues().maxCoeff(), 1.0 + 1e-12);
    EXPECT_LT((spec.factor * spec.factor.adjoint() - spec.shifted).norm(), 1e-12);
}

TEST(EstimateExpectation, ProductObservable) {
    // sigma_z on the first qubit of two
    ComplexMatrix a = ComplexMatrix::Zero(4, 4);
    a.diagonal() << 1.0, 1.0, -1.0, -1.0;
    const ObservableSpec spec = shift_observable(a);
    for (Eigen::Index i = 0; i < 4; ++i) {
        const double v = estimate_expectation(spec, identity_terms(4),
                                              InitialEnsemble::basis(4, i), 1, 0,
                                              EstimationMode::exact);
        EXPECT_NEAR(v, i < 2 ? 1.0 : -1.0, 1e-14);
    }
}

TEST(EstimateExpectation, IdentityObservableIsTrace) {
    Gen gen(54);
    const KrausSet ks = kraus_from_lindblad(gen.lindblad(3, 2), 5.0, true);
    const auto terms = enumerate_products(ks, 3, PruningPolicy{0.0});
    const ObservableSpec spec = shift_observable(linalg::identity(3));
    const double v = estimate_expectation(spec, terms, InitialEnsemble::pure(gen.state(3)), 1, 0,
                                          EstimationMode::exact);
    EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(EstimateExpectation, FmoInitialEnergy) {
    const ObservableSpec spec = shift_observable(fmo::default_hamiltonian());
    const double v = estimate_expectation(spec, identity_terms(5), InitialEnsemble::basis(5, 1),
                                          1, 0, EstimationMode::exact);
    EXPECT_NEAR(v, fmo::default_hamiltonian()(1, 1).real(), 1e-12);
    EXPECT_NEAR(v, 0.0267, 1e-12);
}

TEST(EstimateExpectation, RandomObservablesMatchDense) {
    Gen gen(55);
    for (int trial = 0; trial < 15; ++trial) {
        const Eigen::Index n = gen.integer(2, 5);
        const ComplexMatrix a = gen.hermitian(n);
        const KrausSet ks = kraus_from_lindblad(gen.lindblad(n, 2), 8.0, true);
        const auto terms = enumerate_products(ks, 2, PruningPolicy{0.0});
        const InitialEnsemble e = InitialEnsemble::pure(gen.state(n));
        const ObservableSpec spec = shift_observable(a);
        const double dense = (a * sum_terms(terms, pure_state_density(e)).matrix()).trace().real();
        const double got = estimate_expectation(spec, terms, e, 1, 0, EstimationMode::exact);
        EXPECT_NEAR(got, dense, 1e-10);
        const double sampled =
            estimate_expectation(spec, terms, e, 4096, 5, EstimationMode::sampled);
        EXPECT_LE(std::abs(sampled), spec.norm + 1e-12);
    }
}
