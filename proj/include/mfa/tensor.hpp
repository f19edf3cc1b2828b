#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace mfa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

std::size_t product(std::span<const std::size_t> dims);

// Dense real tensor. Entries are laid out with mode 0 varying fastest, so the
// mode-0 unfolding is the buffer itself viewed as a column-major matrix.
//
// In a data tensor, mode 0 is the measurement mode and modes 1..M index the
// causal factors.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Dims dims);
    Tensor(Dims dims, std::vector<double> values);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return dims_.size(); }
    std::size_t extent(std::size_t mode) const;
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    std::size_t linear_index(std::span<const std::size_t> index) const;
    double operator()(std::span<const std::size_t> index) const {
        return values_[linear_index(index)];
    }
    double& operator()(std::span<const std::size_t> index) {
        return values_[linear_index(index)];
    }
    double operator()(std::initializer_list<std::size_t> index) const {
        return (*this)(std::span<const std::size_t>(index.begin(), index.size()));
    }
    double& operator()(std::initializer_list<std::size_t> index) {
        return (*this)(std::span<const std::size_t>(index.begin(), index.size()));
    }

    /// Zero-copy mode-0 unfolding (I_0 x prod of the remaining extents).
    Eigen::Map<const Matrix> mode0() const;
    Eigen::Map<Matrix> mode0();

    double norm() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Dims dims_;
    std::vector<double> values_;
};

/// Mode-m unfolding. Columns enumerate the remaining modes in increasing mode
/// number with the lowest-numbered mode varying fastest.
Matrix unfold(const Tensor& t, std::size_t mode);

/// Inverse of unfold: mat must be I_m x prod_{n != m} I_n.
Tensor fold(const Matrix& mat, std::size_t mode, const Dims& dims);

/// t x_m a: every mode-m fiber is multiplied by a (a.cols() == I_m).
Tensor mode_multiply(const Tensor& t, const Matrix& a, std::size_t mode);

/// Gram matrix of the mode-m unfolding, unfold(t,m) * unfold(t,m)^T.
Matrix mode_gram(const Tensor& t, std::size_t mode);

Matrix kronecker(const Matrix& a, const Matrix& b);

/// Kronecker product of a list taken in reverse: v_last (x) ... (x) v_first.
/// With this order the result indexes the joint code with the first vector
/// varying fastest, matching the column order of unfold(., 0).
Vector kronecker_reversed(std::span<const Vector> vectors);

/// v_1 o v_2 o ... o v_M.
Tensor outer_rank1(std::span<const Vector> vectors);

struct Centered {
    Tensor data;
    Vector mean;
};

/// Subtracts the average observation (mode-0 fiber) from every observation.
Centered center_observations(const Tensor& t);

}  // namespace mfa
