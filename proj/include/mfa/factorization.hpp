#pragma once

#include "mfa/model.hpp"
#include "mfa/neural.hpp"
#include "mfa/tensor.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mfa {

enum class SubspaceEngine { svd, hebbian };

struct TrainingConfig {
    Dims ranks;  // R_1 .. R_M
    Schedule schedule = Schedule::sequential;
    std::size_t max_iters = 100;
    /// Stop once |L(t) - L(t-1)| <= tol * ||D||_F.
    double tol = 1e-8;
    /// Orthonormality penalty weights. Only reported by cost_evaluate; the
    /// SVD step keeps factors orthonormal by construction.
    std::vector<double> lambda;
    SubspaceEngine engine = SubspaceEngine::svd;
    HebbianConfig hebbian;
    /// Factor the measurement mode too (full HOSVD), keeping
    /// measurement_rank columns of U_0.
    bool factor_measurement_mode = false;
    std::size_t measurement_rank = 0;
};

/// Throws ValidationError naming the offending field.
void validate(const TrainingConfig& cfg, const Dims& data_dims);

/// Alternating least squares over the causal modes (and mode 0 when
/// requested). The data is centered internally; the mean is stored in the
/// model. When the iteration cap is hit the best iterate seen is returned
/// with provenance.converged == false.
CausalModel m_mode_svd(const Tensor& d, const TrainingConfig& cfg);

// ---------------------------------------------------------------------------
// Shared ALS machinery. The kernel and hierarchical trainers plug their own
// subspace step into the same driver.
// ---------------------------------------------------------------------------

struct ModeUpdate {
    Matrix factor;   // I_m x R_m, the basis used for synthesis
    Matrix forward;  // R_m x I_m, applied to project the data (U^T or C^+)
    std::vector<std::string> warnings;
};

/// Computes mode m's factor from the partially projected tensor x (mode m at
/// full extent). `previous` is the factor from the last iterate. Must be
/// safe to call concurrently for different modes.
using SubspaceStep = std::function<ModeUpdate(const Tensor& x, std::size_t mode,
                                              std::size_t rank, const ModeUpdate& previous)>;

struct AlsResult {
    std::vector<ModeUpdate> modes;  // indexed by tensor mode 0..M; mode 0 unused unless factored
    Tensor core;                    // extended core (mode 0 kept, or projected and lifted)
    Provenance provenance;
};

/// Runs the ALS schedule of cfg on already centered data.
AlsResult run_als(const Tensor& centered, const TrainingConfig& cfg, const SubspaceStep& step);

/// The plain SVD step: leading eigenvectors of unfold(x, m) unfold(x, m)^T.
ModeUpdate svd_step(const Tensor& x, std::size_t mode, std::size_t rank);

/// Packs an ALS result into a model.
CausalModel make_model(AlsResult&& result, const Vector& mean, const TrainingConfig& cfg);

// ---------------------------------------------------------------------------
// The three ways of forming X_m.
// ---------------------------------------------------------------------------

struct AlsState {
    Tensor data;                   // centered D
    std::vector<Matrix> factors;   // current U_1..U_M (factors[m-1])
    std::vector<Matrix> previous;  // U_1..U_M of the previous iterate
    std::vector<Tensor> x;         // X_1..X_M as last computed (x[m-1])
    std::size_t iteration = 0;
};

/// parallel:     X_m = D x_{n!=m} U_n^T
/// asynchronous: X_m <- X_m x_{n!=m} (U_n^T U_n^prev)
/// sequential:   X_m = (X_{m-1} x_{m-1} U_{m-1}^T) x_m U_m  (cyclic in m)
/// The sequential chain equals the full reprojection only when U_m U_m^T
/// acts as the identity on the data (no truncation in mode m).
Tensor als_update_x(const AlsState& state, std::size_t mode, Schedule schedule);

// ---------------------------------------------------------------------------
// Core, cost and synthesis.
// ---------------------------------------------------------------------------

enum class CoreMethod { direct, tensor_autoencoder };

/// T = D x_1 U_1^+ ... x_M U_M^+ (U^T for orthonormal factors).
Tensor compute_extended_core(const Tensor& d, std::span<const Matrix> factors,
                             CoreMethod method = CoreMethod::direct,
                             const HebbianConfig& autoencoder = {});

/// core x_1 U_1 ... x_M U_M.
Tensor reconstruct(const Tensor& core, std::span<const Matrix> factors);

/// ||d - (reconstruction + mean)||_F + sum_m lambda_m ||U_m^T U_m - I||_F.
double cost_evaluate(const Tensor& d, const CausalModel& model,
                     std::span<const double> lambda = {});

/// unfold(core, 0) (u_M (x) ... (x) u_1) + mean. An empty mean counts as zero.
Vector synthesize(const Tensor& core, std::span<const Vector> reps, const Vector& mean = {});
Vector synthesize(const CausalModel& model, std::span<const Vector> reps);

}  // namespace mfa
