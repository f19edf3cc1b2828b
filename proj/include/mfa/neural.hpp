#pragma once

#include "mfa/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>

namespace mfa {

struct HebbianConfig {
    /// Learning rate. 0 selects 1 / ||x||_F^2.
    double eta = 0.0;
    std::size_t epochs = 5000;
    /// A neuron has converged once its weight vector moves less than tol
    /// for `patience` consecutive updates.
    double tol = 1e-7;
    std::size_t patience = 3;
    std::uint64_t seed = 0;
    /// false: full-batch updates. true: one column (observation) at a time.
    bool stochastic = false;
};

struct HebbianResult {
    Matrix v;             // columns are the learned neurons, unit norm
    Vector sigma;         // per-neuron scale ||x^T v_r||
    std::size_t epochs = 0;  // largest epoch count over the neurons
    bool converged = true;
};

/// Learns the leading r-dimensional left subspace of x one neuron at a time:
///     dv = eta (x - V V^T x) x^T v,   v <- (v + dv) / ||v + dv||
/// with V the neurons already trained. `warm_start`, when given, supplies
/// the initial weights (columns); otherwise they are seeded uniform vectors.
/// Throws DivergenceError when ||v + dv|| exceeds 1e6.
HebbianResult hebbian_subspace(const Matrix& x, std::size_t r, const HebbianConfig& cfg,
                               const Matrix* warm_start = nullptr);

struct AutoencoderResult {
    Tensor core;
    std::size_t epochs = 0;
    bool converged = true;
};

/// Fits the decoder weights unfold(T, 0) against the frozen code
/// (U_M (x) ... (x) U_1)^T. Batch mode solves the least-squares problem in
/// closed form; stochastic mode streams one observation at a time.
AutoencoderResult core_via_autoencoder(const Tensor& d, std::span<const Matrix> factors,
                                       const HebbianConfig& cfg);

}  // namespace mfa
