#include "mfa/inverse.hpp"

#include "mfa/error.hpp"
#include "mfa/factorization.hpp"
#include "mfa/linalg.hpp"
#include "mfa/parallel.hpp"

#include <cmath>
#include <string>

namespace mfa {

namespace {

// r contracted with every vector except the one of mode `skip`.
Vector contract_except(const Tensor& r, const std::vector<Vector>& v, std::size_t skip) {
    Tensor t = r;
    for (std::size_t n = 0; n < r.order(); ++n)
        if (n != skip) t = mode_multiply(t, v[n].transpose(), n);
    return Eigen::Map<const Vector>(t.values().data(), static_cast<Eigen::Index>(t.size()));
}

double inner_with_outer(const Tensor& r, const std::vector<Vector>& v) {
    return contract_except(r, v, r.order() - 1).dot(v.back());
}

}  // namespace

Rank1Result rank1_approximate(const Tensor& r, const Rank1Options& options) {
    if (r.order() == 0 || r.size() == 0) throw DimensionError("rank1_approximate: empty tensor");
    const double norm = r.norm();
    if (!std::isfinite(norm)) throw NonFiniteError("rank1_approximate: non-finite entries");
    if (norm == 0.0) throw DegenerateInputError("rank1_approximate: zero tensor has no rank-1 direction");

    const std::size_t order = r.order();
    Rank1Result out;
    out.vectors.resize(order);
    for (std::size_t m = 0; m < order; ++m) out.vectors[m] = truncated_svd(unfold(r, m), 1).u.col(0);

    const std::size_t sweeps = options.method == Rank1Method::m_mode_svd_leading ? 1 : options.max_iters;
    double previous = 0.0;
    out.converged = options.method == Rank1Method::m_mode_svd_leading;
    for (std::size_t it = 1; it <= sweeps; ++it) {
        double lambda = 0.0;
        for (std::size_t m = 0; m < order; ++m) {
            Vector a = contract_except(r, out.vectors, m);
            lambda = a.norm();
            if (lambda == 0.0) break;
            out.vectors[m] = a / lambda;
        }
        out.iterations = it;
        if (options.method == Rank1Method::als_cp && std::abs(lambda - previous) <= options.tol * lambda) {
            out.converged = true;
            break;
        }
        previous = lambda;
    }

    for (std::size_t m = 0; m + 1 < order; ++m) {
        Matrix col = out.vectors[m];
        normalize_column_signs(col);
        out.vectors[m] = col.col(0);
    }
    out.lambda = inner_with_outer(r, out.vectors);
    if (out.lambda < 0.0) {
        out.vectors.back() = -out.vectors.back();
        out.lambda = -out.lambda;
    }
    Tensor fit = outer_rank1(out.vectors);
    double sq = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double e = r.values()[i] - out.lambda * fit.values()[i];
        sq += e * e;
    }
    out.residual = std::sqrt(sq);
    return out;
}

FactorLabel classify_factor(const Vector& rep, const Matrix& factor) {
    if (rep.size() != factor.cols())
        throw DimensionError("classify_factor: representation has length " + std::to_string(rep.size()) +
                             ", factor rank is " + std::to_string(factor.cols()));
    const double rep_norm = rep.norm();
    if (rep_norm == 0.0) throw DegenerateInputError("classify_factor: zero representation");
    if (factor.rows() == 0) throw DimensionError("classify_factor: factor has no rows");
    FactorLabel best{0, -1.0};
    for (Eigen::Index i = 0; i < factor.rows(); ++i) {
        double row_norm = factor.row(i).norm();
        double c = row_norm == 0.0 ? 0.0 : std::abs(factor.row(i).dot(rep)) / (row_norm * rep_norm);
        if (c > best.cosine) best = {static_cast<std::size_t>(i), c};
    }
    return best;
}

MultilinearProjector::MultilinearProjector(const CausalModel& model) : model_(&model) {
    if (model.core.order() < 2 || model.core.size() == 0)
        throw ValidationError("model: no trained core");
    if (model.factors.size() + 1 != model.core.order())
        throw ValidationError("model: core order does not match the factor count");
    core_pinv_ = pseudoinverse(model.core.mode0());
    pinv_norm_ = core_pinv_.norm();
}

Tensor MultilinearProjector::response(const Vector& d) const {
    const auto& core = model_->core;
    if (d.size() != static_cast<Eigen::Index>(core.dims()[0]))
        throw DimensionError("observation has length " + std::to_string(d.size()) +
                             ", model expects " + std::to_string(core.dims()[0]));
    Vector centered = model_->mean.size() ? Vector(d - model_->mean) : d;
    Vector vec = core_pinv_ * centered;
    Dims dims(core.dims().begin() + 1, core.dims().end());
    return Tensor(dims, std::vector<double>(vec.data(), vec.data() + vec.size()));
}

ProjectionResult MultilinearProjector::project(const Vector& d, const Rank1Options& options) const {
    ProjectionResult out;
    out.response = response(d);
    const double rnorm = out.response.norm();
    out.residual = rnorm;
    if (rnorm <= 1e-12 * pinv_norm_ * d.norm()) {
        out.degenerate = true;
        return out;
    }
    Rank1Result fit = rank1_approximate(out.response, options);
    out.reps = std::move(fit.vectors);
    out.scale = fit.lambda;
    out.residual = fit.residual;
    out.rank1_iterations = fit.iterations;
    out.rank1_converged = fit.converged;
    for (std::size_t m = 0; m < out.reps.size(); ++m)
        out.labels.push_back(classify_factor(out.reps[m], model_->factors[m]));
    return out;
}

ProjectionResult multilinear_project(const CausalModel& model, const Vector& d,
                                     const Rank1Options& options) {
    return MultilinearProjector(model).project(d, options);
}

double gate_score(const CausalModel& model, const ProjectionResult& candidate, const Vector& d) {
    Vector recon;
    if (candidate.degenerate) {
        recon = model.mean.size() ? model.mean : Vector::Zero(d.size());
    } else {
        std::vector<Vector> rows;
        for (std::size_t m = 0; m < candidate.labels.size(); ++m)
            rows.push_back(model.factors[m].row(static_cast<Eigen::Index>(candidate.labels[m].index)).transpose());
        recon = synthesize(model, rows);
    }
    return -(d - recon).squaredNorm();
}

PiecewiseResult piecewise_project(const PiecewiseEnsemble& ensemble, const Vector& d,
                                  const Rank1Options& options) {
    if (ensemble.models.empty()) throw ValidationError("ensemble: no models");
    const std::size_t dim = ensemble.models.front().measurement_dim();
    for (std::size_t k = 0; k < ensemble.models.size(); ++k)
        if (ensemble.models[k].measurement_dim() != dim)
            throw DimensionError("ensemble: model " + std::to_string(k) + " has measurement dimension " +
                                 std::to_string(ensemble.models[k].measurement_dim()) + ", expected " +
                                 std::to_string(dim));

    PiecewiseResult out;
    out.candidates.resize(ensemble.models.size());
    out.scores.resize(ensemble.models.size());
    parallel_for(ensemble.models.size(), [&](std::size_t k) {
        out.candidates[k] = multilinear_project(ensemble.models[k], d, options);
        out.scores[k] = gate_score(ensemble.models[k], out.candidates[k], d);
    });
    for (std::size_t k = 1; k < out.scores.size(); ++k)
        if (out.scores[k] > out.scores[out.chosen]) out.chosen = k;
    return out;
}

}  // namespace mfa
