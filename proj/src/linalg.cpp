#include "mfa/linalg.hpp"

#include "mfa/error.hpp"
#include "mfa/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace mfa {

namespace {

void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite()) throw NonFiniteError(std::string(what) + ": input has non-finite entries");
}

// Unit vector orthogonal to the first `count` columns of q, chosen among the
// standard basis vectors (largest residual wins, lowest index on ties).
Vector completion_vector(const Matrix& q, Eigen::Index count) {
    const Eigen::Index n = q.rows();
    Vector best;
    double best_norm = -1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        Vector e = Vector::Unit(n, k);
        for (int pass = 0; pass < 2; ++pass)
            e -= q.leftCols(count) * (q.leftCols(count).transpose() * e);
        double nrm = e.norm();
        if (nrm > best_norm + 1e-12) {
            best_norm = nrm;
            best = e;
        }
    }
    return best / best_norm;
}

// Turns columns of `recovered` (a v_i or a^T u_i) into an orthonormal set:
// column i is divided by s_i, then re-orthogonalized against the earlier
// columns. Columns whose singular value vanishes are completed from the
// standard basis.
Matrix finish_recovered_side(Matrix recovered, const Vector& s) {
    const double s_max = s.size() ? s(0) : 0.0;
    const double null_cutoff = s_max * 1e-13;
    for (Eigen::Index i = 0; i < recovered.cols(); ++i) {
        bool null_direction = !(s(i) > null_cutoff) || s(i) == 0.0;
        Vector w;
        if (!null_direction) {
            w = recovered.col(i) / s(i);
            for (int pass = 0; pass < 2; ++pass)
                w -= recovered.leftCols(i) * (recovered.leftCols(i).transpose() * w);
            double nrm = w.norm();
            if (nrm < 1e-8)
                null_direction = true;
            else
                w /= nrm;
        }
        if (null_direction) w = completion_vector(recovered, i);
        recovered.col(i) = w;
    }
    return recovered;
}

// Singular values from Gram eigenvalues. Eigenvalues within rounding of
// zero (relative to the largest) would otherwise surface as s ~ 1e-8.
Vector singular_from_gram(const Vector& eig, Eigen::Index dim) {
    const double top = eig.size() ? std::max(eig(0), 0.0) : 0.0;
    const double floor = static_cast<double>(dim) * std::numeric_limits<double>::epsilon() * top;
    Vector s(eig.size());
    for (Eigen::Index i = 0; i < eig.size(); ++i) s(i) = eig(i) > floor ? std::sqrt(eig(i)) : 0.0;
    return s;
}

}  // namespace

// Only the lower triangle is accumulated and then mirrored, so the result is
// exactly symmetric.
Matrix gram_left(const Matrix& a) {
    Matrix g = Matrix::Zero(a.rows(), a.rows());
    g.selfadjointView<Eigen::Lower>().rankUpdate(a);
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

EigenPairs leading_eigenpairs(const Matrix& symmetric, std::size_t count) {
    if (symmetric.rows() != symmetric.cols())
        throw DimensionError("leading_eigenpairs: matrix is not square");
    if (count > static_cast<std::size_t>(symmetric.rows()))
        throw DimensionError("leading_eigenpairs: requested " + std::to_string(count) +
                             " pairs of a " + std::to_string(symmetric.rows()) + "x" +
                             std::to_string(symmetric.cols()) + " matrix");
    require_finite(symmetric, "leading_eigenpairs");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
    if (solver.info() != Eigen::Success)
        throw NonFiniteError("leading_eigenpairs: eigensolver failed");
    const auto k = static_cast<Eigen::Index>(count);
    EigenPairs out;
    out.values = solver.eigenvalues().reverse().head(k);
    out.vectors = solver.eigenvectors().rowwise().reverse().leftCols(k);
    normalize_column_signs(out.vectors);
    return out;
}

Vector normalize_column_signs(Matrix& m) {
    Vector signs = Vector::Ones(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            double mag = std::abs(m(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (m.rows() > 0 && m(arg, j) < 0) {
            m.col(j) = -m.col(j);
            signs(j) = -1.0;
        }
    }
    return signs;
}

TruncatedSVD truncated_svd(const Matrix& a, std::size_t rank, GramSide side) {
    const auto n = static_cast<std::size_t>(a.rows());
    const auto p = static_cast<std::size_t>(a.cols());
    if (rank == 0 || rank > std::min(n, p))
        throw DimensionError("truncated_svd: rank " + std::to_string(rank) +
                             " not in [1, " + std::to_string(std::min(n, p)) + "]");
    require_finite(a, "truncated_svd");
    if (side == GramSide::automatic) side = n <= p ? GramSide::left : GramSide::right;

    TruncatedSVD out;
    if (side == GramSide::left) {
        EigenPairs ep = leading_eigenpairs(gram_left(a), rank);
        out.s = singular_from_gram(ep.values, a.rows());
        out.u = std::move(ep.vectors);
        out.v = finish_recovered_side(a.transpose() * out.u, out.s);
    } else {
        Matrix gram = gram_left(a.transpose());
        EigenPairs ep = leading_eigenpairs(gram, rank);
        out.s = singular_from_gram(ep.values, a.cols());
        out.u = finish_recovered_side(a * ep.vectors, out.s);
        out.v = std::move(ep.vectors);
    }
    Vector signs = normalize_column_signs(out.u);
    out.v = out.v * signs.asDiagonal();
    return out;
}

Matrix pseudoinverse(const Matrix& a, double relative_tol) {
    require_finite(a, "pseudoinverse");
    if (a.size() == 0) return Matrix(a.cols(), a.rows());
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = relative_tol * (s.size() ? s(0) : 0.0);
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix left_inverse(const Matrix& u) {
    Matrix gram = u.transpose() * u;
    gram.diagonal().array() -= 1.0;
    if (gram.size() == 0 || gram.cwiseAbs().maxCoeff() <= 1e-10) return u.transpose();
    return pseudoinverse(u);
}

Matrix orthonormal_basis(const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

double max_principal_angle(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("max_principal_angle: subspaces have different shapes");
    if (a.cols() == 0) return 0.0;
    Matrix qa = orthonormal_basis(a);
    Matrix qb = orthonormal_basis(b);
    Matrix residual = qb - qa * (qa.transpose() * qb);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(residual.transpose() * residual,
                                                 Eigen::EigenvaluesOnly);
    double sine = std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
    return std::asin(std::min(1.0, sine));
}

// ---------------------------------------------------------------------------
// Block merging
// ---------------------------------------------------------------------------

BlockFactor make_block_factor(const Matrix& block, std::size_t rank) {
    std::size_t full = std::min<std::size_t>(block.rows(), block.cols());
    std::size_t k = rank == 0 ? full : std::min(rank, full);
    TruncatedSVD svd = truncated_svd(block, k);
    return {std::move(svd.u), svd.s.asDiagonal() * svd.v.transpose()};
}

std::vector<std::size_t> block_row_offsets(std::span<const BlockFactor> blocks) {
    std::vector<std::size_t> offsets;
    std::size_t row = 0;
    for (const auto& b : blocks) {
        offsets.push_back(row);
        row += static_cast<std::size_t>(b.u.rows());
    }
    return offsets;
}

TruncatedSVD to_svd(const BlockFactor& f) {
    std::size_t k = std::min<std::size_t>(f.sv.rows(), f.sv.cols());
    TruncatedSVD inner = truncated_svd(f.sv, k);
    TruncatedSVD out;
    out.s = inner.s;
    out.v = inner.v;
    if (f.u.size()) {
        out.u = f.u * inner.u;
        Vector signs = normalize_column_signs(out.u);
        out.v = out.v * signs.asDiagonal();
    }
    return out;
}

BlockFactor merge_blocks_flat(std::span<const BlockFactor> blocks, std::size_t rank,
                              Matrix* rotation, bool assemble_u) {
    if (blocks.empty()) throw DimensionError("merge of an empty block list");
    const Eigen::Index cols = blocks.front().sv.cols();
    Eigen::Index stacked_rows = 0;
    Eigen::Index total_rows = 0;
    for (const auto& b : blocks) {
        if (b.sv.cols() != cols)
            throw DimensionError("block merge: blocks have " + std::to_string(b.sv.cols()) +
                                 " and " + std::to_string(cols) + " columns");
        if (b.u.size() && b.u.cols() != b.sv.rows())
            throw DimensionError("block merge: block basis and S V^T disagree");
        stacked_rows += b.sv.rows();
        total_rows += b.u.rows();
    }
    Matrix stack(stacked_rows, cols);
    Eigen::Index row = 0;
    for (const auto& b : blocks) {
        stack.middleRows(row, b.sv.rows()) = b.sv;
        row += b.sv.rows();
    }
    std::size_t full = std::min<std::size_t>(stack.rows(), stack.cols());
    std::size_t k = rank == 0 ? full : rank;
    if (k > full)
        throw DimensionError("block merge: rank " + std::to_string(k) +
                             " exceeds stacked rank bound " + std::to_string(full));
    TruncatedSVD svd = truncated_svd(stack, k);

    BlockFactor merged;
    merged.sv = svd.s.asDiagonal() * svd.v.transpose();
    if (assemble_u) {
        merged.u = Matrix::Zero(total_rows, static_cast<Eigen::Index>(k));
        Eigen::Index urow = 0;
        Eigen::Index wrow = 0;
        for (const auto& b : blocks) {
            merged.u.middleRows(urow, b.u.rows()) = b.u * svd.u.middleRows(wrow, b.sv.rows());
            urow += b.u.rows();
            wrow += b.sv.rows();
        }
    }
    if (rotation) *rotation = std::move(svd.u);
    return merged;
}

TruncatedSVD block_svd_merge(std::span<const BlockFactor> blocks, std::size_t rank,
                             const MergeOptions& options, MergeTrace* trace) {
    if (blocks.empty()) throw DimensionError("block_svd_merge: no blocks");
    if (rank == 0) throw DimensionError("block_svd_merge: rank must be positive");
    if (trace) {
        *trace = MergeTrace{};
        trace->leaves = blocks.size();
    }

    std::vector<BlockFactor> level(blocks.begin(), blocks.end());
    if (!options.assemble_u)
        for (auto& b : level) b.u.resize(0, 0);
    std::size_t depth = 0;
    while (level.size() > 1) {
        ++depth;
        std::size_t parents = (level.size() + 1) / 2;
        bool root_level = parents == 1;
        std::vector<BlockFactor> next(parents);
        std::vector<MergeNode> nodes(parents);
        parallel_for(parents, [&](std::size_t i) {
            auto start = std::chrono::steady_clock::now();
            std::size_t first = 2 * i;
            std::size_t count = std::min<std::size_t>(2, level.size() - first);
            std::span<const BlockFactor> pair(level.data() + first, count);
            Eigen::Index rows = 0;
            for (const auto& b : pair) rows += b.sv.rows();
            std::size_t full = std::min<std::size_t>(rows, pair.front().sv.cols());
            std::size_t k = root_level ? rank
                            : options.node_rank == 0 ? full
                                                     : std::min(options.node_rank, full);
            next[i] = count == 1 ? pair.front()
                                 : merge_blocks_flat(pair, k, nullptr, options.assemble_u);
            auto stop = std::chrono::steady_clock::now();
            nodes[i] = {depth, static_cast<std::size_t>(rows),
                        static_cast<std::size_t>(pair.front().sv.cols()),
                        static_cast<std::size_t>(next[i].sv.rows()),
                        std::chrono::duration<double>(stop - start).count()};
        });
        // An odd block out is carried up unchanged and is not a merge node.
        if (trace)
            for (std::size_t i = 0; i < parents; ++i)
                if (2 * i + 1 < level.size()) trace->nodes.push_back(nodes[i]);
        level = std::move(next);
    }
    if (trace) trace->depth = depth;

    BlockFactor& root = level.front();
    const auto cols = static_cast<std::size_t>(root.sv.cols());
    if (rank > cols || (root.u.size() && rank > static_cast<std::size_t>(root.sv.rows())))
        throw DimensionError("block_svd_merge: rank " + std::to_string(rank) + " exceeds available rank " +
                             std::to_string(std::min<std::size_t>(root.sv.rows(), cols)));
    // Fewer stacked rows than the rank: zero rows make the SVD complete the
    // basis with null directions, as truncated_svd does.
    if (static_cast<std::size_t>(root.sv.rows()) < rank)
        root.sv.conservativeResizeLike(Matrix::Zero(static_cast<Eigen::Index>(rank), root.sv.cols()));
    TruncatedSVD out = to_svd(root);
    out.s.conservativeResize(static_cast<Eigen::Index>(rank));
    out.v.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(rank));
    if (out.u.size()) out.u.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(rank));
    return out;
}

}  // namespace mfa
