#include <gtest/gtest.h>

#include "mfa/error.hpp"
#include "mfa/tensor.hpp"
#include "test_helpers.hpp"

#include <random>

namespace {

using namespace mfa;
using mfa::testing::max_abs_diff;
using mfa::testing::random_matrix;
using mfa::testing::random_tensor;
using mfa::testing::random_vector;

// Column of element (i_0..i_M) in the mode-m unfolding, straight from the
// cluster-numbering formula: 1 + sum_{k != m} (i_k - 1) prod_{l < k, l != m} I_l
// (zero-based here).
std::size_t column_by_formula(const Dims& dims, const std::vector<std::size_t>& idx,
                              std::size_t mode) {
    std::size_t col = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k == mode) continue;
        std::size_t stride = 1;
        for (std::size_t l = 0; l < k; ++l)
            if (l != mode) stride *= dims[l];
        col += idx[k] * stride;
    }
    return col;
}

// Visits every multi-index of dims in layout order.
template <typename F>
void for_each_index(const Dims& dims, F&& f) {
    std::vector<std::size_t> idx(dims.size(), 0);
    std::size_t total = product(dims);
    for (std::size_t n = 0; n < total; ++n) {
        f(idx);
        for (std::size_t k = 0; k < dims.size(); ++k) {
            if (++idx[k] < dims[k]) break;
            idx[k] = 0;
        }
    }
}

TEST(Tensor, RejectsBadShapes) {
    EXPECT_THROW(Tensor(Dims{}), DimensionError);
    EXPECT_THROW(Tensor(Dims{2, 0}), DimensionError);
    EXPECT_THROW(Tensor(Dims{2, 2}, std::vector<double>(3)), DimensionError);
}

TEST(Tensor, LayoutIsModeZeroFastest) {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t({1, 0}), 2.0);
    EXPECT_EQ(t({0, 1}), 3.0);
    EXPECT_EQ(t.mode0()(1, 2), 6.0);
}

TEST(Unfold, TwoWayModeZeroIsTheMatrixItself) {
    Tensor t({2, 2}, {1, 2, 3, 4});
    Matrix expected(2, 2);
    expected << 1, 3, 2, 4;
    EXPECT_EQ(unfold(t, 0), expected);
    EXPECT_EQ(unfold(t, 1), expected.transpose());
}

TEST(Unfold, MatchesIndexFormulaOnEnumeratedCube) {
    Dims dims{2, 2, 2};
    std::vector<double> vals(8);
    for (int i = 0; i < 8; ++i) vals[i] = i + 1;
    Tensor t(dims, vals);
    Matrix u1 = unfold(t, 1);
    ASSERT_EQ(u1.rows(), 2);
    ASSERT_EQ(u1.cols(), 4);
    // Columns run (i_0, i_2) with i_0 fastest.
    Matrix expected(2, 4);
    expected << 1, 2, 5, 6,
                3, 4, 7, 8;
    EXPECT_EQ(u1, expected);
}

TEST(Unfold, MatchesIndexFormulaExhaustively) {
    std::mt19937_64 rng(7);
    for (const Dims& dims : {Dims{3, 2, 4}, Dims{2, 3, 2, 3}, Dims{2, 2, 3, 2, 2}}) {
        Tensor t = random_tensor(rng, dims);
        for (std::size_t m = 0; m < dims.size(); ++m) {
            Matrix u = unfold(t, m);
            for_each_index(dims, [&](const std::vector<std::size_t>& idx) {
                auto col = static_cast<Eigen::Index>(column_by_formula(dims, idx, m));
                ASSERT_EQ(u(static_cast<Eigen::Index>(idx[m]), col), t(idx));
            });
        }
    }
}

TEST(Unfold, ModeOutOfRange) {
    Tensor t({2, 2});
    EXPECT_THROW(unfold(t, 2), DimensionError);
}

TEST(Fold, ScalarAndIdentityCases) {
    Matrix one(1, 1);
    one << 4.5;
    Tensor s = fold(one, 0, {1});
    EXPECT_EQ(s.size(), 1u);
    EXPECT_EQ(s.values()[0], 4.5);

    std::mt19937_64 rng(3);
    Matrix m = random_matrix(rng, 3, 8);
    EXPECT_EQ(unfold(fold(m, 0, {3, 2, 4}), 0), m);
}

TEST(Fold, RoundTripEveryMode) {
    std::mt19937_64 rng(11);
    Dims dims{2, 3, 4};
    Tensor t = random_tensor(rng, dims);
    for (std::size_t m = 0; m < dims.size(); ++m) {
        EXPECT_EQ(fold(unfold(t, m), m, dims), t);
        Matrix r = random_matrix(rng, static_cast<Eigen::Index>(dims[m]),
                                 static_cast<Eigen::Index>(t.size() / dims[m]));
        EXPECT_EQ(unfold(fold(r, m, dims), m), r);
    }
}

TEST(Fold, ShapeMismatch) {
    EXPECT_THROW(fold(Matrix::Zero(3, 7), 0, {3, 2, 4}), DimensionError);
}

TEST(ModeMultiply, IdentityIsNoOp) {
    std::mt19937_64 rng(5);
    Tensor t = random_tensor(rng, {3, 4, 2});
    for (std::size_t m = 0; m < 3; ++m)
        EXPECT_EQ(mode_multiply(t, Matrix::Identity(t.dims()[m], t.dims()[m]), m), t);
}

TEST(ModeMultiply, MatchesFoldOfProduct) {
    std::mt19937_64 rng(6);
    Tensor t = random_tensor(rng, {3, 4, 2, 3});
    for (std::size_t m = 0; m < 4; ++m) {
        Matrix a = random_matrix(rng, 5, static_cast<Eigen::Index>(t.dims()[m]));
        Dims out = t.dims();
        out[m] = 5;
        Tensor expected = fold(a * unfold(t, m), m, out);
        EXPECT_LE(max_abs_diff(mode_multiply(t, a, m), expected), 1e-12);
    }
}

TEST(ModeMultiply, DistinctModesCommute) {
    std::mt19937_64 rng(8);
    Tensor t = random_tensor(rng, {3, 3, 3});
    Matrix a = random_matrix(rng, 3, 3);
    Matrix b = random_matrix(rng, 3, 3);
    Tensor ab = mode_multiply(mode_multiply(t, a, 1), b, 2);
    Tensor ba = mode_multiply(mode_multiply(t, b, 2), a, 1);
    EXPECT_LE(max_abs_diff(ab, ba), 1e-12);
}

TEST(ModeMultiply, SameModeComposesContravariantly) {
    std::mt19937_64 rng(9);
    Tensor t = random_tensor(rng, {3, 3, 3});
    Matrix a = random_matrix(rng, 3, 4);
    Matrix b = random_matrix(rng, 4, 3);
    EXPECT_LE(max_abs_diff(mode_multiply(t, a * b, 1),
                           mode_multiply(mode_multiply(t, b, 1), a, 1)),
              1e-12);
}

TEST(ModeMultiply, DistributesOverAddition) {
    std::mt19937_64 rng(10);
    Tensor s = random_tensor(rng, {2, 3, 2});
    Tensor t = random_tensor(rng, {2, 3, 2});
    Tensor sum = s;
    for (std::size_t i = 0; i < sum.size(); ++i) sum.values()[i] += t.values()[i];
    Matrix a = random_matrix(rng, 4, 3);
    Tensor lhs = mode_multiply(sum, a, 1);
    Tensor rhs = mode_multiply(s, a, 1);
    Tensor rt = mode_multiply(t, a, 1);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs.values()[i] += rt.values()[i];
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12);
}

TEST(ModeMultiply, DimensionMismatch) {
    EXPECT_THROW(mode_multiply(Tensor({2, 3}), Matrix::Zero(2, 2), 1), DimensionError);
}

TEST(Kronecker, IdentityAndHandExpansion) {
    EXPECT_EQ(kronecker(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), Matrix::Identity(6, 6));
    Matrix a(1, 2);
    a << 1, 2;
    Matrix b(2, 1);
    b << 3, 4;
    Matrix expected(2, 2);
    expected << 3, 6, 4, 8;
    EXPECT_EQ(kronecker(a, b), expected);
}

TEST(Kronecker, VecIdentityPinsUnfoldingOrder) {
    // unfold(T x_1 u_1^T ... x_M u_M^T, 0) == unfold(T, 0) (u_M (x) ... (x) u_1)
    std::mt19937_64 rng(12);
    Dims dims{4, 2, 3, 2};
    Tensor core = random_tensor(rng, dims);
    std::vector<Vector> us;
    Tensor lhs = core;
    for (std::size_t m = 1; m < dims.size(); ++m) {
        us.push_back(random_vector(rng, static_cast<Eigen::Index>(dims[m])));
        lhs = mode_multiply(lhs, us.back().transpose(), m);
    }
    Vector rhs = unfold(core, 0) * kronecker_reversed(us);
    EXPECT_LE((lhs.mode0().col(0) - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Outer, BasisAndHandExpansion) {
    std::vector<Vector> basis{Vector::Unit(3, 0), Vector::Unit(2, 0)};
    Tensor corner = outer_rank1(basis);
    EXPECT_EQ(corner({0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(corner.norm(), 1.0);

    Vector u(2), v(2);
    u << 1, 2;
    v << 3, 4;
    std::vector<Vector> uv{u, v};
    Matrix expected(2, 2);
    expected << 3, 4, 6, 8;
    EXPECT_EQ(unfold(outer_rank1(uv), 0), expected);
    EXPECT_EQ(unfold(outer_rank1(uv), 0), u * v.transpose());
}

TEST(Outer, EmptyInputRejected) {
    EXPECT_THROW(outer_rank1(std::vector<Vector>{}), DimensionError);
    EXPECT_THROW(outer_rank1(std::vector<Vector>{Vector()}), DimensionError);
}

TEST(Center, ConstantTensorBecomesZero) {
    Tensor t({3, 2, 2}, std::vector<double>(12, 2.5));
    auto [data, mean] = center_observations(t);
    EXPECT_EQ(data.norm(), 0.0);
    EXPECT_EQ(mean, Vector::Constant(3, 2.5));
}

TEST(Center, AlreadyCenteredAndIdempotent) {
    std::mt19937_64 rng(13);
    Tensor t = random_tensor(rng, {4, 3, 2});
    auto once = center_observations(t);
    EXPECT_LE(once.data.mode0().rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    auto twice = center_observations(once.data);
    EXPECT_LE(twice.mean.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(max_abs_diff(once.data, twice.data), 1e-12);
}

}  // namespace
