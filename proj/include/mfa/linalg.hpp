#pragma once

#include "mfa/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mfa {

/// a ~= u * diag(s) * v^T with orthonormal u, v and nonincreasing s.
struct TruncatedSVD {
    Matrix u;
    Vector s;
    Matrix v;
};

/// Which Gram matrix is eigendecomposed. `left` uses a*a^T and recovers
/// v = a^T u / s; `right` uses a^T*a and recovers u = a v / s. `automatic`
/// picks the smaller of the two.
enum class GramSide { automatic, left, right };

/// a * a^T. Shared by the SVD path and the linear-kernel covariance so both
/// see identical bits.
Matrix gram_left(const Matrix& a);

struct EigenPairs {
    Vector values;   // nonincreasing
    Matrix vectors;  // columns, sign-normalized
};

/// Leading `count` eigenpairs of a symmetric matrix, sorted by decreasing
/// eigenvalue. Each eigenvector is signed so its largest-magnitude entry is
/// positive.
EigenPairs leading_eigenpairs(const Matrix& symmetric, std::size_t count);

TruncatedSVD truncated_svd(const Matrix& a, std::size_t rank,
                           GramSide side = GramSide::automatic);

/// Moore-Penrose pseudoinverse. Singular values at or below
/// relative_tol * s_max are treated as zero.
Matrix pseudoinverse(const Matrix& a, double relative_tol = 1e-12);

/// u^T when u has orthonormal columns (within 1e-10), otherwise the
/// pseudoinverse. Used wherever a factor is "inverted" for projection.
Matrix left_inverse(const Matrix& u);

/// Flips column signs so the largest-magnitude entry of each column is
/// positive (the first one wins a tie). Returns the applied signs.
Vector normalize_column_signs(Matrix& m);

/// Orthonormal basis (Householder QR) for the column span of a.
Matrix orthonormal_basis(const Matrix& a);

/// Largest principal angle (radians) between span(a) and span(b). Both must
/// have the same column count. Computed from the sine so tiny angles stay
/// accurate.
double max_principal_angle(const Matrix& a, const Matrix& b);

// ---------------------------------------------------------------------------
// Block SVD merging.
//
// A tall matrix split into row blocks D_k = U_k (S_k V_k^T) is recombined by
// taking the SVD of the stacked S_k V_k^T products:
//     stack = W S V^T,   U = blockdiag(U_1, ..., U_n) W.
// The merged V is shared by every block.
// ---------------------------------------------------------------------------

struct BlockFactor {
    Matrix u;   // rows of this block x r_k, orthonormal columns
    Matrix sv;  // r_k x cols, the block's S V^T
};

/// Analyzes one block. rank == 0 keeps every component (no truncation).
BlockFactor make_block_factor(const Matrix& block, std::size_t rank = 0);

/// First row of each block inside the vertically stacked matrix.
std::vector<std::size_t> block_row_offsets(std::span<const BlockFactor> blocks);

struct MergeNode {
    std::size_t level = 0;  // 0 = leaves, increasing toward the root
    std::size_t rows = 0;   // rows of the stacked S V^T products
    std::size_t cols = 0;
    std::size_t rank = 0;   // rank kept at this node
    double seconds = 0.0;
};

struct MergeTrace {
    std::vector<MergeNode> nodes;
    std::size_t leaves = 0;
    std::size_t depth = 0;  // number of merge levels
};

struct MergeOptions {
    /// Rank kept at internal nodes; 0 keeps everything.
    std::size_t node_rank = 0;
    /// When false only s and v are produced (u is left empty).
    bool assemble_u = true;
};

/// Merges all blocks in one step (a single SVD of the full stack).
BlockFactor merge_blocks_flat(std::span<const BlockFactor> blocks, std::size_t rank,
                              Matrix* rotation = nullptr, bool assemble_u = true);

/// Balanced binary reduction of the blocks; rank is the final truncation.
/// A single block returns that block's own SVD.
TruncatedSVD block_svd_merge(std::span<const BlockFactor> blocks, std::size_t rank,
                             const MergeOptions& options = {}, MergeTrace* trace = nullptr);

/// Converts a merged factor u * sv back into SVD form (u orthonormal,
/// rows of sv orthogonal).
TruncatedSVD to_svd(const BlockFactor& f);

}  // namespace mfa
