#include "mfa/hierarchy.hpp"

#include "mfa/error.hpp"
#include "mfa/io.hpp"
#include "mfa/neural.hpp"
#include "mfa/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>

namespace mfa {

ClusterIndex::ClusterIndex(Dims dims, std::size_t mode) : dims_(std::move(dims)), mode_(mode) {
    if (mode == 0 || mode >= dims_.size())
        throw DimensionError("clusters are defined for causal modes 1.." +
                             std::to_string(dims_.size() - 1) + ", got mode " + std::to_string(mode));
    count_ = 1;
    for (std::size_t n = 1; n < dims_.size(); ++n)
        if (n != mode_) count_ *= dims_[n];
}

std::size_t ClusterIndex::number(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size() - 1)
        throw DimensionError("cluster index needs " + std::to_string(dims_.size() - 1) + " entries");
    std::size_t n = 0;
    std::size_t stride = 1;
    for (std::size_t k = 1; k < dims_.size(); ++k) {
        if (k == mode_) continue;
        if (index[k - 1] >= dims_[k])
            throw DimensionError("cluster index entry " + std::to_string(k) + " out of range");
        n += index[k - 1] * stride;
        stride *= dims_[k];
    }
    return n;
}

Dims ClusterIndex::index(std::size_t n) const {
    if (n >= count_)
        throw DimensionError("cluster number " + std::to_string(n) + " out of range");
    Dims out(dims_.size() - 1, 0);
    for (std::size_t k = 1; k < dims_.size(); ++k) {
        if (k == mode_) continue;
        out[k - 1] = n % dims_[k];
        n /= dims_[k];
    }
    return out;
}

std::vector<Matrix> cluster_matrices(const Tensor& d, std::size_t mode) {
    ClusterIndex index(d.dims(), mode);
    const Matrix x = unfold(d, mode);
    const auto len = static_cast<Eigen::Index>(d.dims()[0]);
    std::vector<Matrix> out;
    out.reserve(index.count());
    for (std::size_t n = 0; n < index.count(); ++n)
        out.push_back(x.middleCols(static_cast<Eigen::Index>(n) * len, len).transpose());
    return out;
}

ClusterPca constrained_cluster_pca(std::span<const Matrix> clusters, std::size_t rank) {
    if (clusters.empty()) throw DimensionError("constrained_cluster_pca: no clusters");
    const Eigen::Index cols = clusters.front().cols();
    for (const auto& c : clusters)
        if (c.cols() != cols)
            throw DimensionError("constrained_cluster_pca: clusters have " + std::to_string(c.cols()) +
                                 " and " + std::to_string(cols) + " columns");

    std::vector<BlockFactor> blocks(clusters.size());
    parallel_for(clusters.size(), [&](std::size_t n) { blocks[n] = make_block_factor(clusters[n]); });

    Eigen::Index stacked = 0;
    for (const auto& b : blocks) stacked += b.sv.rows();
    if (rank == 0 || rank > static_cast<std::size_t>(std::min(stacked, cols)))
        throw ValidationError("constrained_cluster_pca: rank " + std::to_string(rank) +
                              " must be in [1, " + std::to_string(std::min(stacked, cols)) + "]");
    Matrix stack(stacked, cols);
    Eigen::Index row = 0;
    for (const auto& b : blocks) {
        stack.middleRows(row, b.sv.rows()) = b.sv;
        row += b.sv.rows();
    }
    TruncatedSVD svd = truncated_svd(stack, rank);
    Vector signs = normalize_column_signs(svd.v);
    svd.u = svd.u * signs.asDiagonal();

    ClusterPca out;
    out.u = std::move(svd.v);
    out.s = std::move(svd.s);
    row = 0;
    for (auto& b : blocks) {
        out.w.push_back(svd.u.middleRows(row, b.sv.rows()));
        row += b.sv.rows();
        out.v.push_back(std::move(b.u));
    }
    return out;
}

namespace {

struct LeafResult {
    BlockFactor factor;
    std::string warning;
};

LeafResult analyze_leaf(const Matrix& leaf, std::size_t rank, const TrainingConfig& cfg) {
    LeafResult out;
    if (cfg.engine == SubspaceEngine::svd) {
        out.factor = make_block_factor(leaf, rank);
        return out;
    }
    std::size_t full = std::min<std::size_t>(leaf.rows(), leaf.cols());
    std::size_t k = rank == 0 ? full : std::min(rank, full);
    HebbianResult h = hebbian_subspace(leaf.transpose(), k, cfg.hebbian);
    if (!h.converged) out.warning = "hebbian leaf learner stopped at the epoch limit";
    out.factor.u = orthonormal_basis(leaf * h.v);
    out.factor.sv = out.factor.u.transpose() * leaf;
    return out;
}

// Analyzes every leaf concurrently, then merges them up a balanced tree.
ModeUpdate merge_leaves(const std::vector<Matrix>& leaves, std::size_t rank,
                        const TrainingConfig& cfg, const HierarchyOptions& options,
                        MergeTrace& trace) {
    const std::size_t node_rank = options.truncate_nodes ? rank + options.rank_margin : 0;
    std::vector<LeafResult> results(leaves.size());
    parallel_for(leaves.size(), [&](std::size_t i) { results[i] = analyze_leaf(leaves[i], node_rank, cfg); });

    ModeUpdate upd;
    std::vector<BlockFactor> blocks;
    blocks.reserve(results.size());
    for (auto& r : results) {
        if (!r.warning.empty()) upd.warnings.push_back(r.warning);
        blocks.push_back(std::move(r.factor));
    }
    MergeOptions merge;
    merge.node_rank = node_rank;
    merge.assemble_u = false;
    TruncatedSVD svd = block_svd_merge(blocks, rank, merge, &trace);
    normalize_column_signs(svd.v);
    upd.factor = std::move(svd.v);
    upd.forward = upd.factor.transpose();
    return upd;
}

std::vector<Matrix> cluster_leaves(const Tensor& x, std::size_t mode, std::size_t leaf_size) {
    const Matrix xt = unfold(x, mode).transpose();
    const auto len = static_cast<Eigen::Index>(x.dims()[0]);
    const std::size_t clusters = static_cast<std::size_t>(xt.rows() / len);
    std::vector<Matrix> leaves;
    for (std::size_t first = 0; first < clusters; first += leaf_size) {
        std::size_t count = std::min(leaf_size, clusters - first);
        leaves.push_back(xt.middleRows(static_cast<Eigen::Index>(first) * len,
                                       static_cast<Eigen::Index>(count) * len));
    }
    return leaves;
}

CausalModel train_hierarchical(const Tensor& d, const TrainingConfig& cfg,
                               const HierarchyOptions& options,
                               const std::function<std::vector<Matrix>(const Tensor&, std::size_t)>& leaves_of) {
    const std::size_t modes = d.order() - 1;
    std::vector<MergeTrace> traces(modes);
    SubspaceStep step = [&](const Tensor& x, std::size_t m, std::size_t r, const ModeUpdate&) {
        if (m == 0) return svd_step(x, 0, r);
        return merge_leaves(leaves_of(x, m), r, cfg, options, traces[m - 1]);
    };
    Centered c = center_observations(d);
    CausalModel model = make_model(run_als(c.data, cfg, step), c.mean, cfg);
    model.provenance.merge_traces = std::move(traces);
    return model;
}

}  // namespace

CausalModel incremental_block_m_mode_svd(const Tensor& d, const TrainingConfig& cfg,
                                         const HierarchyOptions& options) {
    validate(cfg, d.dims());
    if (options.leaf_size == 0) throw ValidationError("leaf_size: must be at least 1");
    std::size_t most = 0;
    for (std::size_t m = 1; m < d.order(); ++m) most = std::max(most, ClusterIndex(d.dims(), m).count());
    if (options.leaf_size > most)
        throw ValidationError("leaf_size: " + std::to_string(options.leaf_size) +
                              " exceeds the cluster count " + std::to_string(most));
    CausalModel model = train_hierarchical(d, cfg, options, [&](const Tensor& x, std::size_t m) {
        return cluster_leaves(x, m, options.leaf_size);
    });
    model.provenance.algorithm = "incremental-block-m-mode-svd";
    return model;
}

bool PartSegmentation::is_hard() const {
    return (filter.array() == 0.0 || filter.array() == 1.0).all();
}

PartSegmentation hard_segmentation(std::span<const std::size_t> labels) {
    if (labels.empty()) throw ValidationError("segmentation: no measurements");
    std::size_t parts = *std::max_element(labels.begin(), labels.end()) + 1;
    PartSegmentation seg;
    seg.permutation.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) seg.permutation[i] = i;
    seg.filter = Matrix::Zero(static_cast<Eigen::Index>(parts), static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i)
        seg.filter(static_cast<Eigen::Index>(labels[i]), static_cast<Eigen::Index>(i)) = 1.0;
    validate(seg, labels.size());
    return seg;
}

void validate(const PartSegmentation& seg, std::size_t measurements) {
    if (seg.permutation.size() != measurements)
        throw ValidationError("permutation: has " + std::to_string(seg.permutation.size()) +
                              " entries for " + std::to_string(measurements) + " measurements");
    std::vector<bool> seen(measurements, false);
    for (std::size_t from : seg.permutation) {
        if (from >= measurements || seen[from])
            throw ValidationError("permutation: not a bijection (index " + std::to_string(from) + ")");
        seen[from] = true;
    }
    if (seg.filter.cols() != static_cast<Eigen::Index>(measurements) || seg.filter.rows() == 0)
        throw ValidationError("segmentation: filter must be parts x " + std::to_string(measurements));
    if (!seg.filter.allFinite()) throw ValidationError("segmentation: non-finite filter weight");
    for (Eigen::Index p = 0; p < seg.filter.rows(); ++p)
        if ((seg.filter.row(p).array() == 0.0).all())
            throw ValidationError("segmentation: part " + std::to_string(p) + " is empty");
    for (Eigen::Index i = 0; i < seg.filter.cols(); ++i)
        if ((seg.filter.col(i).array() == 0.0).all())
            throw ValidationError("segmentation: position " + std::to_string(i) +
                                  " belongs to no part");
}

namespace {

std::vector<Matrix> part_blocks(const Tensor& x, const PartSegmentation& seg, std::size_t mode) {
    const Matrix xt = unfold(x, mode).transpose();
    const auto len = static_cast<Eigen::Index>(x.dims()[0]);
    const Eigen::Index clusters = xt.rows() / len;
    std::vector<Matrix> blocks;
    for (Eigen::Index p = 0; p < seg.filter.rows(); ++p) {
        std::vector<Eigen::Index> positions;
        for (Eigen::Index i = 0; i < len; ++i)
            if (seg.filter(p, i) != 0.0) positions.push_back(i);
        const auto count = static_cast<Eigen::Index>(positions.size());
        Matrix block(clusters * count, xt.cols());
        for (Eigen::Index n = 0; n < clusters; ++n)
            for (Eigen::Index s = 0; s < count; ++s) {
                auto from = static_cast<Eigen::Index>(seg.permutation[static_cast<std::size_t>(positions[s])]);
                block.row(n * count + s) = seg.filter(p, positions[s]) * xt.row(n * len + from);
            }
        blocks.push_back(std::move(block));
    }
    return blocks;
}

}  // namespace

std::vector<Matrix> part_based_reorder(const Tensor& d, const PartSegmentation& seg, std::size_t mode) {
    ClusterIndex check(d.dims(), mode);
    validate(seg, d.dims()[0]);
    return part_blocks(d, seg, mode);
}

CausalModel part_based_m_mode_svd(const Tensor& d, const TrainingConfig& cfg,
                                  const PartSegmentation& seg, const HierarchyOptions& options) {
    validate(cfg, d.dims());
    validate(seg, d.dims()[0]);
    if (cfg.factor_measurement_mode)
        throw ValidationError("factor_measurement_mode: not available with a part segmentation");
    CausalModel model = train_hierarchical(d, cfg, options, [&](const Tensor& x, std::size_t m) {
        return part_blocks(x, seg, m);
    });
    model.provenance.algorithm = "part-based-m-mode-svd";
    if (!seg.is_hard())
        model.provenance.warnings.push_back("soft segmentation filters are experimental");
    return model;
}

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path,
                                                   std::string_view expected_header) {
    std::istringstream in(io::read_text(path));
    std::string line;
    if (!std::getline(in, line))
        throw IoError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(expected_header, 0) != 0)
        throw IoError(path.string() + ": expected header starting with '" + std::string(expected_header) + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

std::size_t parse_index(const std::string& text, const std::filesystem::path& path) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw IoError(path.string() + ": '" + text + "' is not a non-negative integer");
    return value;
}

double parse_weight(const std::string& text, const std::filesystem::path& path) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw IoError(path.string() + ": '" + text + "' is not a number");
    return value;
}

}  // namespace

PartSegmentation read_segmentation(const std::filesystem::path& segmentation,
                                   const std::filesystem::path& permutation,
                                   std::size_t measurements) {
    PartSegmentation seg;
    seg.permutation.resize(measurements);
    for (std::size_t i = 0; i < measurements; ++i) seg.permutation[i] = i;
    if (!permutation.empty()) {
        std::vector<bool> placed(measurements, false);
        auto rows = read_csv_rows(permutation, "from_index,to_index");
        if (rows.size() != measurements)
            throw ValidationError("permutation: " + std::to_string(rows.size()) + " rows for " +
                                  std::to_string(measurements) + " measurements");
        for (const auto& r : rows) {
            if (r.size() != 2) throw IoError(permutation.string() + ": each row needs 2 fields");
            std::size_t from = parse_index(r[0], permutation);
            std::size_t to = parse_index(r[1], permutation);
            if (to >= measurements || placed[to])
                throw ValidationError("permutation: target " + std::to_string(to) + " repeated or out of range");
            placed[to] = true;
            seg.permutation[to] = from;
        }
    }

    auto rows = read_csv_rows(segmentation, "measurement_index,part_id");
    std::size_t parts = 0;
    for (const auto& r : rows) {
        if (r.size() != 2 && r.size() != 3)
            throw IoError(segmentation.string() + ": each row needs 2 or 3 fields");
        parts = std::max(parts, parse_index(r[1], segmentation) + 1);
    }
    seg.filter = Matrix::Zero(static_cast<Eigen::Index>(parts), static_cast<Eigen::Index>(measurements));
    for (const auto& r : rows) {
        std::size_t i = parse_index(r[0], segmentation);
        if (i >= measurements)
            throw ValidationError("segmentation: measurement " + std::to_string(i) + " out of range");
        double w = r.size() == 3 ? parse_weight(r[2], segmentation) : 1.0;
        seg.filter(static_cast<Eigen::Index>(parse_index(r[1], segmentation)), static_cast<Eigen::Index>(i)) = w;
    }
    validate(seg, measurements);
    return seg;
}

void write_segmentation(const PartSegmentation& seg, const std::filesystem::path& segmentation,
                        const std::filesystem::path& permutation) {
    const bool hard = seg.is_hard();
    std::string text = hard ? "measurement_index,part_id\n" : "measurement_index,part_id,weight\n";
    for (Eigen::Index i = 0; i < seg.filter.cols(); ++i)
        for (Eigen::Index p = 0; p < seg.filter.rows(); ++p) {
            double w = seg.filter(p, i);
            if (w == 0.0) continue;
            text += std::to_string(i) + "," + std::to_string(p);
            if (!hard) text += "," + io::format_double(w);
            text += "\n";
        }
    io::write_text(segmentation, text);

    std::string perm = "from_index,to_index\n";
    for (std::size_t to = 0; to < seg.permutation.size(); ++to)
        perm += std::to_string(seg.permutation[to]) + "," + std::to_string(to) + "\n";
    io::write_text(permutation, perm);
}

}  // namespace mfa
