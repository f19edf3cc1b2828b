#include "mfa/tensor.hpp"

#include "mfa/error.hpp"

#include <functional>
#include <numeric>
#include <string>

namespace mfa {

namespace {

void check_dims(const Dims& dims) {
    if (dims.empty()) throw DimensionError("tensor needs at least one mode");
    for (std::size_t m = 0; m < dims.size(); ++m)
        if (dims[m] == 0)
            throw DimensionError("tensor extent of mode " + std::to_string(m) + " is zero");
}

void check_mode(const Tensor& t, std::size_t mode) {
    if (mode >= t.order())
        throw DimensionError("mode " + std::to_string(mode) + " out of range for order-" +
                             std::to_string(t.order()) + " tensor");
}

// The buffer splits around mode m as [left, I_m, right], left = prod_{k<m} I_k.
struct Split {
    std::size_t left;
    std::size_t extent;
    std::size_t right;
};

Split split_at(const Dims& dims, std::size_t mode) {
    Split s{1, dims[mode], 1};
    for (std::size_t k = 0; k < mode; ++k) s.left *= dims[k];
    for (std::size_t k = mode + 1; k < dims.size(); ++k) s.right *= dims[k];
    return s;
}

}  // namespace

std::size_t product(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Dims dims) : dims_(std::move(dims)) {
    check_dims(dims_);
    values_.assign(product(dims_), 0.0);
}

Tensor::Tensor(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
    check_dims(dims_);
    if (values_.size() != product(dims_))
        throw DimensionError("tensor has " + std::to_string(values_.size()) +
                             " values but its extents multiply to " +
                             std::to_string(product(dims_)));
}

std::size_t Tensor::extent(std::size_t mode) const {
    check_mode(*this, mode);
    return dims_[mode];
}

std::size_t Tensor::linear_index(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size())
        throw DimensionError("index has " + std::to_string(index.size()) +
                             " entries for an order-" + std::to_string(dims_.size()) +
                             " tensor");
    std::size_t linear = 0;
    std::size_t stride = 1;
    for (std::size_t m = 0; m < dims_.size(); ++m) {
        if (index[m] >= dims_[m]) throw DimensionError("tensor index out of range");
        linear += index[m] * stride;
        stride *= dims_[m];
    }
    return linear;
}

Eigen::Map<const Matrix> Tensor::mode0() const {
    auto rows = static_cast<Eigen::Index>(dims_.at(0));
    auto cols = static_cast<Eigen::Index>(values_.size() / dims_[0]);
    return {values_.data(), rows, cols};
}

Eigen::Map<Matrix> Tensor::mode0() {
    auto rows = static_cast<Eigen::Index>(dims_.at(0));
    auto cols = static_cast<Eigen::Index>(values_.size() / dims_[0]);
    return {values_.data(), rows, cols};
}

double Tensor::norm() const {
    if (values_.empty()) return 0.0;
    return Eigen::Map<const Vector>(values_.data(), static_cast<Eigen::Index>(values_.size()))
        .norm();
}

Matrix unfold(const Tensor& t, std::size_t mode) {
    check_mode(t, mode);
    if (mode == 0) return t.mode0();
    auto [left, extent, right] = split_at(t.dims(), mode);
    Matrix out(static_cast<Eigen::Index>(extent), static_cast<Eigen::Index>(left * right));
    const double* src = t.values().data();
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t i = 0; i < extent; ++i)
            for (std::size_t l = 0; l < left; ++l)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l + left * r)) =
                    src[l + left * (i + extent * r)];
    return out;
}

Tensor fold(const Matrix& mat, std::size_t mode, const Dims& dims) {
    check_dims(dims);
    if (mode >= dims.size())
        throw DimensionError("fold mode " + std::to_string(mode) + " out of range");
    auto [left, extent, right] = split_at(dims, mode);
    if (static_cast<std::size_t>(mat.rows()) != extent ||
        static_cast<std::size_t>(mat.cols()) != left * right)
        throw DimensionError("fold: matrix is " + std::to_string(mat.rows()) + "x" +
                             std::to_string(mat.cols()) + ", expected " +
                             std::to_string(extent) + "x" + std::to_string(left * right));
    Tensor out(dims);
    double* dst = out.values().data();
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t i = 0; i < extent; ++i)
            for (std::size_t l = 0; l < left; ++l)
                dst[l + left * (i + extent * r)] =
                    mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l + left * r));
    return out;
}

Tensor mode_multiply(const Tensor& t, const Matrix& a, std::size_t mode) {
    check_mode(t, mode);
    auto [left, extent, right] = split_at(t.dims(), mode);
    if (static_cast<std::size_t>(a.cols()) != extent)
        throw DimensionError("mode_multiply: matrix has " + std::to_string(a.cols()) +
                             " columns but mode " + std::to_string(mode) + " has extent " +
                             std::to_string(extent));
    Dims out_dims = t.dims();
    out_dims[mode] = static_cast<std::size_t>(a.rows());
    Tensor out(out_dims);
    const auto rows = static_cast<Eigen::Index>(a.rows());
    const auto l = static_cast<Eigen::Index>(left);
    const auto e = static_cast<Eigen::Index>(extent);

    if (left == 1) {
        // Slabs are contiguous columns: a single product covers the whole tensor.
        Eigen::Map<const Matrix> src(t.values().data(), e, static_cast<Eigen::Index>(right));
        Eigen::Map<Matrix> dst(out.values().data(), rows, static_cast<Eigen::Index>(right));
        dst.noalias() = a * src;
        return out;
    }
    // Each right index owns a left x I_m slab; multiply it by a^T.
    for (std::size_t r = 0; r < right; ++r) {
        Eigen::Map<const Matrix> src(t.values().data() + r * left * extent, l, e);
        Eigen::Map<Matrix> dst(out.values().data() + r * left * out_dims[mode], l, rows);
        dst.noalias() = src * a.transpose();
    }
    return out;
}

Matrix mode_gram(const Tensor& t, std::size_t mode) {
    Matrix x = unfold(t, mode);
    return x * x.transpose();
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Vector kronecker_reversed(std::span<const Vector> vectors) {
    if (vectors.empty()) throw DimensionError("kronecker of an empty list");
    Vector acc = vectors.front();
    for (std::size_t k = 1; k < vectors.size(); ++k) acc = kronecker(vectors[k], acc);
    return acc;
}

Tensor outer_rank1(std::span<const Vector> vectors) {
    if (vectors.empty()) throw DimensionError("outer product of an empty list");
    Dims dims;
    for (const auto& v : vectors) {
        if (v.size() == 0) throw DimensionError("outer product of an empty vector");
        dims.push_back(static_cast<std::size_t>(v.size()));
    }
    Vector flat = kronecker_reversed(vectors);
    return Tensor(std::move(dims), std::vector<double>(flat.data(), flat.data() + flat.size()));
}

Centered center_observations(const Tensor& t) {
    Centered out{t, Vector()};
    auto obs = out.data.mode0();
    out.mean = obs.rowwise().mean();
    obs.colwise() -= out.mean;
    return out;
}

}  // namespace mfa
