#pragma once

#include "mfa/factorization.hpp"
#include "mfa/model.hpp"
#include "mfa/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mfa {

/// Throws ValidationError for a degree below 1, a non-positive sigma or
/// non-finite parameters.
void validate(const KernelSpec& spec);

/// "linear", "polynomial", "polynomial-affine", "sigmoid", "rbf".
std::string_view kernel_kind_name(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

/// Parses "rbf:sigma=1.5", "polynomial-affine:d=2", "sigmoid:alpha=0.5,beta=-1"
/// or a bare kind name. "poly" and "poly-affine" are accepted as short forms.
KernelSpec parse_kernel_spec(std::string_view text);
/// Inverse of parse_kernel_spec (shortest round-trip number formatting).
std::string format_kernel_spec(const KernelSpec& spec);

/// K(u, v). Throws DimensionError on a length mismatch.
double kernel_eval(const KernelSpec& spec, const Vector& u, const Vector& v);

/// [C]_jk = sum over every other causal index of K(x_{..j..}, x_{..k..}),
/// where the arguments are mode-0 fibers. The linear kernel goes through
/// gram_left(unfold(x, m)), the same bits the SVD step uses.
Matrix kernel_mode_covariance(const Tensor& x, std::size_t mode, const KernelSpec& spec);

struct IcaConfig {
    std::size_t max_sweeps = 200;
    double tol = 1e-10;
    std::uint64_t seed = 0;
};

/// C = U W^-1 with W an orthogonal rotation, so c * w == u.
struct FactorComponents {
    Matrix c;
    Matrix w;
    Matrix u;
    bool converged = true;
    std::size_t sweeps = 0;
};

/// Rotation maximizing the kurtosis of the whitened coordinates of the
/// columns of x_unfolded in the basis u (fixed point with symmetric
/// decorrelation). On non-convergence w is the identity and converged is
/// false.
FactorComponents ica_rotation(const Matrix& u, const Matrix& x_unfolded, const IcaConfig& cfg = {});

enum class ComponentAnalysis { pca, ica };

struct KernelTrainingOptions {
    ComponentAnalysis analysis = ComponentAnalysis::pca;
    IcaConfig ica;
    /// Reuse a mode's kernel covariance when X_m is unchanged from the last
    /// sweep (typically near convergence).
    bool cache_covariance = false;
};

/// Kernel multilinear PCA (analysis = pca) or ICA (analysis = ica). With
/// every kernel linear and pca analysis this is m_mode_svd. An empty specs
/// list means all linear.
CausalModel k_mpca(const Tensor& d, const TrainingConfig& cfg, std::span<const KernelSpec> specs,
                   const KernelTrainingOptions& options = {});

}  // namespace mfa
