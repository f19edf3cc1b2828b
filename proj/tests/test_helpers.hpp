#pragma once

#include "mfa/linalg.hpp"
#include "mfa/tensor.hpp"

#include <random>

namespace mfa::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
    return random_matrix(rng, n, 1);
}

inline Tensor random_tensor(std::mt19937_64& rng, const Dims& dims) {
    std::normal_distribution<double> normal;
    Tensor t(dims);
    for (auto& v : t.values()) v = normal(rng);
    return t;
}

inline Matrix random_orthonormal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    return orthonormal_basis(random_matrix(rng, rows, cols));
}

// Orthonormal columns that are also orthogonal to the all-ones vector, so
// data synthesized from them is already centered. Needs cols < rows.
inline Matrix random_centered_orthonormal(std::mt19937_64& rng, Eigen::Index rows,
                                          Eigen::Index cols) {
    Matrix g(rows, cols + 1);
    g.col(0).setOnes();
    g.rightCols(cols) = random_matrix(rng, rows, cols);
    return orthonormal_basis(g).rightCols(cols);
}

// Exact multilinear data D = T x_1 U_1 ... x_M U_M with centered factors.
struct LowRankData {
    Tensor data;
    Tensor core;
    std::vector<Matrix> factors;
};

inline LowRankData low_rank_data(std::mt19937_64& rng, const Dims& dims, const Dims& ranks) {
    LowRankData out;
    Dims core_dims{dims[0]};
    core_dims.insert(core_dims.end(), ranks.begin(), ranks.end());
    out.core = random_tensor(rng, core_dims);
    out.data = out.core;
    for (std::size_t k = 0; k < ranks.size(); ++k) {
        auto rows = static_cast<Eigen::Index>(dims[k + 1]);
        auto cols = static_cast<Eigen::Index>(ranks[k]);
        out.factors.push_back(cols < rows ? random_centered_orthonormal(rng, rows, cols)
                                          : random_orthonormal(rng, rows, cols));
        out.data = mode_multiply(out.data, out.factors.back(), k + 1);
    }
    return out;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
    return worst;
}

}  // namespace mfa::testing
