#include <gtest/gtest.h>

#include "mfa/error.hpp"
#include "mfa/linalg.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace {

using namespace mfa;
using mfa::testing::random_matrix;
using mfa::testing::random_orthonormal;

double orthonormality_error(const Matrix& q) {
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

TEST(SVD, DiagonalMatrix) {
    Matrix a = Vector::LinSpaced(3, 3, 1).asDiagonal();
    auto svd = truncated_svd(a, 3);
    EXPECT_LE((svd.s - Vector::LinSpaced(3, 3, 1)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((svd.u - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((svd.v - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SVD, ExactLowRankReconstruction) {
    std::mt19937_64 rng(21);
    Matrix a = random_matrix(rng, 7, 2) * random_matrix(rng, 2, 11);
    for (GramSide side : {GramSide::automatic, GramSide::left, GramSide::right}) {
        auto svd = truncated_svd(a, 2, side);
        Matrix back = svd.u * svd.s.asDiagonal() * svd.v.transpose();
        EXPECT_LE((back - a).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE(orthonormality_error(svd.u), 1e-12);
        EXPECT_LE(orthonormality_error(svd.v), 1e-12);
    }
}

TEST(SVD, BothGramSidesAgreeWithReference) {
    std::mt19937_64 rng(22);
    Matrix a = random_matrix(rng, 6, 9);
    Eigen::JacobiSVD<Matrix> ref(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    auto l = truncated_svd(a, 4, GramSide::left);
    auto r = truncated_svd(a, 4, GramSide::right);
    EXPECT_LE((l.s - ref.singularValues().head(4)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((r.s - ref.singularValues().head(4)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(max_principal_angle(l.u, ref.matrixU().leftCols(4)), 1e-8);
    // Same sign convention on both paths.
    EXPECT_LE((l.u - r.u).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((l.v - r.v).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SVD, RankDeficientCompletesBasis) {
    // Rank 1 but three components requested: the extra columns are still
    // orthonormal and carry zero singular values.
    Matrix a = Vector::Ones(4) * Vector::LinSpaced(5, 1, 5).transpose();
    auto svd = truncated_svd(a, 3);
    EXPECT_LE(orthonormality_error(svd.u), 1e-12);
    EXPECT_LE(orthonormality_error(svd.v), 1e-12);
    EXPECT_LE(std::abs(svd.s(1)), 1e-7);
    EXPECT_LE((svd.u * svd.s.asDiagonal() * svd.v.transpose() - a).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SVD, RejectsBadRankAndNonFinite) {
    Matrix a = Matrix::Identity(3, 4);
    EXPECT_THROW(truncated_svd(a, 0), DimensionError);
    EXPECT_THROW(truncated_svd(a, 4), DimensionError);
    a(0, 1) = std::nan("");
    EXPECT_THROW(truncated_svd(a, 2), NonFiniteError);
}

TEST(SVD, SignConventionLargestEntryPositive) {
    std::mt19937_64 rng(23);
    Matrix a = random_matrix(rng, 5, 8);
    auto svd = truncated_svd(a, 3);
    for (Eigen::Index k = 0; k < 3; ++k) {
        Eigen::Index i;
        svd.u.col(k).cwiseAbs().maxCoeff(&i);
        EXPECT_GT(svd.u(i, k), 0.0);
    }
}

TEST(Pseudoinverse, PenroseConditions) {
    std::mt19937_64 rng(24);
    Matrix a = random_matrix(rng, 6, 3) * random_matrix(rng, 3, 5);  // rank 3
    Matrix p = pseudoinverse(a);
    EXPECT_LE((a * p * a - a).norm(), 1e-10 * a.norm());
    EXPECT_LE((p * a * p - p).norm(), 1e-10 * p.norm());
    EXPECT_LE(((a * p).transpose() - a * p).norm(), 1e-10);
    EXPECT_LE(((p * a).transpose() - p * a).norm(), 1e-10);
}

TEST(Pseudoinverse, SingularDiagonal) {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 2.0;
    Matrix expected = Matrix::Zero(2, 2);
    expected(0, 0) = 0.5;
    EXPECT_LE((pseudoinverse(a) - expected).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(pseudoinverse(Matrix::Zero(2, 3)), Matrix::Zero(3, 2));
}

TEST(PrincipalAngle, KnownAngles) {
    Matrix e1 = Matrix::Identity(3, 1);
    Matrix tilted(3, 1);
    tilted << 1, 1, 0;
    EXPECT_NEAR(max_principal_angle(e1, tilted), std::numbers::pi / 4, 1e-12);
    EXPECT_NEAR(max_principal_angle(e1, Matrix::Identity(3, 3).col(1)), std::numbers::pi / 2,
                1e-12);
    std::mt19937_64 rng(25);
    Matrix q = random_orthonormal(rng, 6, 3);
    Matrix mixed = q * random_matrix(rng, 3, 3);
    EXPECT_LE(max_principal_angle(q, mixed), 1e-10);
}

TEST(BlockMerge, DuplicatedBlocksScaleBySqrtTwo) {
    std::mt19937_64 rng(26);
    Matrix d = random_matrix(rng, 4, 6);
    auto whole = truncated_svd(d, 4);
    std::vector<BlockFactor> blocks{make_block_factor(d), make_block_factor(d)};
    auto merged = block_svd_merge(blocks, 4);
    EXPECT_LE((merged.s - std::sqrt(2.0) * whole.s).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(max_principal_angle(merged.v, whole.v), 1e-8);
}

TEST(BlockMerge, SingleBlockIsItsOwnSVD) {
    std::mt19937_64 rng(27);
    Matrix d = random_matrix(rng, 5, 7);
    auto direct = truncated_svd(d, 3);
    std::vector<BlockFactor> one{make_block_factor(d)};
    auto merged = block_svd_merge(one, 3);
    EXPECT_LE((merged.s - direct.s).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((merged.u - direct.u).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((merged.v - direct.v).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(BlockMerge, TwoBlockSplitMatchesWholeMatrix) {
    std::mt19937_64 rng(28);
    Matrix d = random_matrix(rng, 8, 5);
    auto whole = truncated_svd(d, 5);
    std::vector<BlockFactor> blocks{make_block_factor(d.topRows(4)),
                                    make_block_factor(d.bottomRows(4))};
    auto merged = block_svd_merge(blocks, 5);
    EXPECT_LE((merged.s - whole.s).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((merged.u - whole.u).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((merged.v - whole.v).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(BlockMerge, TreeAndFlatAgreeAcrossManyBlocks) {
    std::mt19937_64 rng(29);
    Matrix d = random_matrix(rng, 7, 3) * random_matrix(rng, 3, 6) +
               1e-3 * random_matrix(rng, 7, 6);
    d.conservativeResize(35, 6);
    d.bottomRows(28) = random_matrix(rng, 28, 3) * random_matrix(rng, 3, 6);
    std::vector<BlockFactor> blocks;
    for (Eigen::Index r = 0; r < 35; r += 5) blocks.push_back(make_block_factor(d.middleRows(r, 5)));
    auto whole = truncated_svd(d, 3);
    MergeTrace trace;
    auto tree = block_svd_merge(blocks, 3, {}, &trace);
    EXPECT_EQ(trace.depth, 3u);  // ceil(log2 7)
    EXPECT_EQ(trace.leaves, 7u);
    EXPECT_EQ(trace.nodes.size(), 6u);  // a binary tree over 7 leaves
    EXPECT_LE((tree.s - whole.s).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(max_principal_angle(tree.u, whole.u), 1e-8);
    EXPECT_LE(max_principal_angle(tree.v, whole.v), 1e-8);

    BlockFactor flat = merge_blocks_flat(blocks, 3);
    auto flat_svd = to_svd(flat);
    EXPECT_LE((flat_svd.s - whole.s).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(BlockMerge, SkippingUStillGivesSandV) {
    std::mt19937_64 rng(30);
    Matrix d = random_matrix(rng, 12, 4);
    std::vector<BlockFactor> blocks{make_block_factor(d.topRows(6)),
                                    make_block_factor(d.bottomRows(6))};
    MergeOptions opt;
    opt.assemble_u = false;
    auto merged = block_svd_merge(blocks, 2, opt);
    auto whole = truncated_svd(d, 2);
    EXPECT_LE((merged.s - whole.s).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(max_principal_angle(merged.v, whole.v), 1e-8);
}

TEST(BlockMerge, MismatchedColumnsRejected) {
    std::vector<BlockFactor> blocks{make_block_factor(Matrix::Identity(3, 3)),
                                    make_block_factor(Matrix::Identity(3, 4))};
    EXPECT_THROW(block_svd_merge(blocks, 2), DimensionError);
}

}  // namespace
