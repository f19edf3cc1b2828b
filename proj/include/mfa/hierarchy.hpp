#pragma once

#include "mfa/factorization.hpp"
#include "mfa/linalg.hpp"
#include "mfa/model.hpp"
#include "mfa/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace mfa {

// Numbering of the clusters of mode m: one cluster for every combination of
// the causal indices other than i_m, with the lowest-numbered mode varying
// fastest. Cluster n is column block n of unfold(d, m), transposed.
class ClusterIndex {
public:
    ClusterIndex(Dims dims, std::size_t mode);

    std::size_t mode() const noexcept { return mode_; }
    std::size_t count() const noexcept { return count_; }
    /// index holds i_1..i_M (i_m is ignored).
    std::size_t number(std::span<const std::size_t> index) const;
    /// Inverse of number(); the returned i_m is 0.
    Dims index(std::size_t n) const;

private:
    Dims dims_;
    std::size_t mode_;
    std::size_t count_;
};

/// The I_0 x I_m matrices obtained by varying causal factor m with every
/// other causal index held fixed, in ClusterIndex order.
std::vector<Matrix> cluster_matrices(const Tensor& d, std::size_t mode);

struct ClusterPca {
    Matrix u;                // I_m x r, shared by every cluster
    Vector s;                // r
    std::vector<Matrix> w;   // per cluster, k_n x r block of the merge rotation
    std::vector<Matrix> v;   // per cluster, I_0 x k_n left vectors of the cluster
};

/// Mode representation that is the same for every cluster. Each cluster is
/// analyzed on its own (no truncation) and the results are merged, so
///     cluster_n^T ~= u * diag(s) * (v[n] * w[n])^T.
ClusterPca constrained_cluster_pca(std::span<const Matrix> clusters, std::size_t rank);

struct HierarchyOptions {
    /// Clusters of X_m per leaf of the merge tree. A value at least the
    /// cluster count gives a single leaf.
    std::size_t leaf_size = 1;
    /// Leaves and internal nodes keep R_m + rank_margin components. With
    /// truncate_nodes false nothing is truncated below the root.
    bool truncate_nodes = true;
    std::size_t rank_margin = 2;
};

/// M-mode SVD where every mode update is a block SVD over a balanced binary
/// tree of cluster blocks. Leaves are analyzed with cfg.engine. The merge
/// trace of each mode's last update is kept in provenance.merge_traces.
CausalModel incremental_block_m_mode_svd(const Tensor& d, const TrainingConfig& cfg,
                                         const HierarchyOptions& options = {});

// Part-based reordering. Measurements (mode-0 indices) are permuted and then
// filtered into parts; each part selects the matching rows of every cluster.
struct PartSegmentation {
    /// permutation[to] = from: the measurement placed at position `to`.
    std::vector<std::size_t> permutation;
    /// parts x I_0 filter over permuted positions. Hard segmentations hold
    /// 0/1 entries; other weights are treated as soft filters.
    Matrix filter;

    std::size_t part_count() const { return static_cast<std::size_t>(filter.rows()); }
    bool is_hard() const;
};

/// Identity permutation with one part per label. labels[i] is the part of
/// measurement i; part ids must be 0..parts-1 with none empty.
PartSegmentation hard_segmentation(std::span<const std::size_t> labels);

/// Throws ValidationError for a non-bijective permutation, an empty part, or
/// a measurement that no part covers.
void validate(const PartSegmentation& seg, std::size_t measurements);

/// One block per part: the rows of unfold(d, m)^T that the part selects
/// (scaled by the filter weight), cluster by cluster.
std::vector<Matrix> part_based_reorder(const Tensor& d, const PartSegmentation& seg,
                                       std::size_t mode);

/// M-mode SVD whose mode updates merge part blocks instead of cluster
/// blocks. The measurement mode cannot be factored here.
CausalModel part_based_m_mode_svd(const Tensor& d, const TrainingConfig& cfg,
                                  const PartSegmentation& seg,
                                  const HierarchyOptions& options = {});

/// Segmentation CSV: header "measurement_index,part_id[,weight]". Indices
/// refer to permuted positions.
/// Permutation CSV: header "from_index,to_index".
PartSegmentation read_segmentation(const std::filesystem::path& segmentation,
                                   const std::filesystem::path& permutation,
                                   std::size_t measurements);
void write_segmentation(const PartSegmentation& seg, const std::filesystem::path& segmentation,
                        const std::filesystem::path& permutation);

}  // namespace mfa
