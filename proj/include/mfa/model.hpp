#pragma once

#include "mfa/linalg.hpp"
#include "mfa/tensor.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mfa {

enum class KernelKind { linear, polynomial_homogeneous, polynomial_affine, sigmoid, rbf };

/// One kernel per causal mode. Only the parameters of the chosen kind are
/// meaningful: degree for the polynomials, alpha/beta for sigmoid, sigma for
/// rbf.
struct KernelSpec {
    KernelKind kind = KernelKind::linear;
    int degree = 2;
    double alpha = 1.0;
    double beta = 0.0;
    double sigma = 1.0;

    bool is_linear() const { return kind == KernelKind::linear; }
    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

enum class Schedule { sequential, parallel, asynchronous };

std::string_view to_string(Schedule s);
/// Accepts "sequential", "parallel", "async" and "asynchronous".
Schedule parse_schedule(std::string_view name);

/// Which earlier iterate a mode update read from. In the asynchronous
/// schedule source_iteration lags iteration by exactly one.
struct ScheduleEvent {
    std::size_t mode = 0;
    std::size_t iteration = 0;
    std::size_t source_iteration = 0;
};

struct Provenance {
    std::string algorithm = "m-mode-svd";
    Schedule schedule = Schedule::sequential;
    std::string engine = "svd";
    std::size_t iterations = 0;
    double final_cost = 0.0;
    bool converged = false;
    std::vector<double> cost_trace;  // cost after each iteration
    std::vector<std::string> warnings;
    std::vector<ScheduleEvent> schedule_trace;
    std::vector<MergeTrace> merge_traces;  // per mode, hierarchical trainers only
};

/// The trained forward model:
///     d = T x_1 u_1^T ... x_M u_M^T + mean
/// where u_m is a row of factors[m-1].
struct CausalModel {
    Tensor core;                  // extended core, I_0 x R_1 x ... x R_M
    std::vector<Matrix> factors;  // factors[m-1] is the I_m x R_m mode matrix
    Vector mean;                  // length I_0
    Dims ranks;                   // R_1 .. R_M
    std::vector<KernelSpec> kernels;
    /// Present only when mode 0 was factored as well; core then already has
    /// it folded in (core = Z x_0 measurement_basis).
    std::optional<Matrix> measurement_basis;
    Provenance provenance;

    std::size_t factor_count() const { return factors.size(); }
    std::size_t measurement_dim() const { return core.order() ? core.dims()[0] : 0; }
    /// Extents I_1..I_M of the training grid.
    Dims grid() const;
};

}  // namespace mfa
