#pragma once

#include "mfa/model.hpp"
#include "mfa/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mfa {

enum class Rank1Method { als_cp, m_mode_svd_leading };

struct Rank1Result {
    std::vector<Vector> vectors;  // unit vectors, one per mode
    double lambda = 0.0;          // >= 0, r ~= lambda * v_1 o ... o v_M
    double residual = 0.0;        // ||r - lambda * v_1 o ... o v_M||_F
    std::size_t iterations = 0;
    bool converged = true;
};

struct Rank1Options {
    Rank1Method method = Rank1Method::als_cp;
    std::size_t max_iters = 200;
    double tol = 1e-10;  // on the relative change of lambda
};

/// Best rank-1 fit by alternating normalized contractions, started from the
/// leading left singular vector of every unfolding. m_mode_svd_leading runs
/// a single refinement pass. Every vector except the last has its largest
/// entry positive; the last one carries the sign so lambda >= 0.
/// Throws DegenerateInputError for a zero tensor.
Rank1Result rank1_approximate(const Tensor& r, const Rank1Options& options = {});

struct FactorLabel {
    std::size_t index = 0;
    double cosine = 0.0;  // absolute cosine
};

/// Row of `factor` with the largest |cosine| to rep. The lowest index wins a
/// tie. Throws DegenerateInputError for a zero rep.
FactorLabel classify_factor(const Vector& rep, const Matrix& factor);

struct ProjectionResult {
    Tensor response;          // R_1 x ... x R_M
    std::vector<Vector> reps; // unit vectors; empty when degenerate
    double scale = 0.0;       // lambda of the rank-1 fit
    double residual = 0.0;    // ||response - scale * r_1 o ... o r_M||_F
    std::vector<FactorLabel> labels;
    bool degenerate = false;
    std::size_t rank1_iterations = 0;
    bool rank1_converged = true;
};

/// Holds the pseudoinverse of unfold(core, 0) so many observations can be
/// projected against one model.
class MultilinearProjector {
public:
    explicit MultilinearProjector(const CausalModel& model);

    const CausalModel& model() const noexcept { return *model_; }
    /// Minimum-norm response tensor of an observation.
    Tensor response(const Vector& d) const;
    ProjectionResult project(const Vector& d, const Rank1Options& options = {}) const;

private:
    const CausalModel* model_;
    Matrix core_pinv_;
    double pinv_norm_ = 0.0;
};

ProjectionResult multilinear_project(const CausalModel& model, const Vector& d,
                                     const Rank1Options& options = {});

struct PiecewiseEnsemble {
    std::vector<CausalModel> models;
};

struct PiecewiseResult {
    std::size_t chosen = 0;
    std::vector<ProjectionResult> candidates;
    /// -||d - synthesize(model, rows at the labels)||^2 per model.
    std::vector<double> scores;
};

/// Projects d through every model concurrently and keeps the candidate whose
/// snapped reconstruction is closest to d. The lowest model index wins a tie.
PiecewiseResult piecewise_project(const PiecewiseEnsemble& ensemble, const Vector& d,
                                  const Rank1Options& options = {});

/// Reconstruction score of one candidate (see PiecewiseResult::scores).
double gate_score(const CausalModel& model, const ProjectionResult& candidate, const Vector& d);

}  // namespace mfa
