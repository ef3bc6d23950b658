#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include <kdsim/dilation.hpp>

#include "test_util.hpp"

using namespace kdsim;
using kdsim::testing::Gen;

namespace {

double unitarity_error(const ComplexMatrix &u) {
    return (u.adjoint() * u - linalg::identity(u.rows())).norm();
}

ErrorCode code_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::IoError;
}

} // namespace

TEST(Dilate, ZeroIsSwap) {
    const DilatedUnitary u = dilate(ComplexMatrix::Zero(3, 3));
    ComplexMatrix expected = ComplexMatrix::Zero(6, 6);
    expected.topRightCorner(3, 3) = linalg::identity(3);
    expected.bottomLeftCorner(3, 3) = linalg::identity(3);
    EXPECT_LT((u.matrix - expected).norm(), 1e-15);
    EXPECT_EQ(u.base_dim, 3);
}

TEST(Dilate, UnitaryInputHasZeroDefect) {
    Gen gen(41);
    const ComplexMatrix v = linalg::hermitian_propagator(gen.hermitian(4), 1.0, 1.0);
    const DilatedUnitary u = dilate(v);
    EXPECT_LT(u.matrix.topRightCorner(4, 4).norm(), 1e-7);
    EXPECT_LT(u.matrix.bottomLeftCorner(4, 4).norm(), 1e-7);
    EXPECT_LT(unitarity_error(u.matrix), 1e-12);
}

TEST(Dilate, RandomContractionsAreUnitary) {
    Gen gen(42);
    for (int trial = 0; trial < 1000; ++trial) {
        const Eigen::Index n = gen.integer(1, 6);
        const ComplexMatrix m = gen.contraction(n);
        const DilatedUnitary u = dilate(m);
        ASSERT_EQ(u.matrix.rows(), 2 * n);
        EXPECT_LT(unitarity_error(u.matrix), 1e-10) << "trial " << trial;
        EXPECT_EQ(u.matrix.topLeftCorner(n, n), m);
        EXPECT_LT((u.matrix.bottomRightCorner(n, n) + m.adjoint()).norm(), 1e-15);
        EXPECT_EQ(u.weight_scale, 1.0);
    }
}

TEST(Dilate, BlockIdentities) {
    Gen gen(43);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = gen.integer(1, 8);
        const ComplexMatrix m = gen.contraction(n);
        const ComplexMatrix d = defect_operator(m);
        const ComplexMatrix d_adj = defect_operator(m.adjoint());
        const ComplexMatrix id = linalg::identity(n);
        EXPECT_LT((m.adjoint() * m + d * d - id).norm(), 1e-12);
        EXPECT_LT((m * m.adjoint() + d_adj * d_adj - id).norm(), 1e-12);
        // intertwining M D_M = D_{M^dagger} M
        EXPECT_LT((m * d - d_adj * m).norm(), 1e-10);
        const ComplexMatrix mm = m.adjoint() * m;
        EXPECT_LT((d * mm - mm * d).norm(), 1e-12);
    }
}

TEST(Dilate, RescalesRoundingDrift) {
    const ComplexMatrix m = (1.0 + 5e-10) * linalg::identity(2);
    const DilatedUnitary u = dilate(m);
    EXPECT_NEAR(u.weight_scale, (1.0 + 5e-10) * (1.0 + 5e-10), 1e-15);
    EXPECT_LT(unitarity_error(u.matrix), 1e-12);
}

TEST(Dilate, Errors) {
    EXPECT_EQ(code_of([] { dilate(1.01 * linalg::identity(2)); }), ErrorCode::NotContraction);
    EXPECT_EQ(code_of([] { defect_operator(2.0 * linalg::basis_op(2, 0, 1)); }),
              ErrorCode::NotContraction);
    ComplexMatrix nan = linalg::identity(2);
    nan(1, 0) = std::numeric_limits<double>::infinity();
    EXPECT_EQ(code_of([&] { dilate(nan); }), ErrorCode::NonFinite);
    EXPECT_EQ(code_of([] { dilate(ComplexMatrix::Zero(2, 3)); }), ErrorCode::DimensionMismatch);
}

TEST(EmbedState, PadsWithZeros) {
    const StateVector v = linalg::basis_state(3, 2);
    const StateVector e = embed_state(v);
    ASSERT_EQ(e.size(), 6);
    EXPECT_EQ(e.head(3), v);
    EXPECT_EQ(e.tail(3).norm(), 0.0);
}

TEST(EmbedState, RejectsUnnormalized) {
    EXPECT_EQ(code_of([] { embed_state(2.0 * linalg::basis_state(2, 0)); }),
              ErrorCode::NotNormalized);
    EXPECT_EQ(code_of([] { embed_state(StateVector::Zero(2)); }), ErrorCode::NotNormalized);
}
