#include "mfa/kernels.hpp"

#include "mfa/error.hpp"
#include "mfa/io.hpp"
#include "mfa/linalg.hpp"
#include "mfa/parallel.hpp"

#include <charconv>
#include <cmath>
#include <memory>
#include <mutex>
#include <random>
#include <string>

namespace mfa {

namespace {

double parse_number(std::string_view text, std::string_view key) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ValidationError("kernel parameter " + std::string(key) + ": '" + std::string(text) +
                              "' is not a number");
    return value;
}

// (W W^T)^{-1/2} W, which leaves the closest orthogonal matrix.
Matrix symmetric_decorrelation(const Matrix& w) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(w * w.transpose());
    Vector inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

}  // namespace

void validate(const KernelSpec& spec) {
    switch (spec.kind) {
        case KernelKind::linear: return;
        case KernelKind::polynomial_homogeneous:
        case KernelKind::polynomial_affine:
            if (spec.degree < 1) throw ValidationError("kernel degree d must be an integer >= 1");
            return;
        case KernelKind::sigmoid:
            if (!std::isfinite(spec.alpha) || !std::isfinite(spec.beta))
                throw ValidationError("sigmoid kernel alpha and beta must be finite");
            return;
        case KernelKind::rbf:
            if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma))
                throw ValidationError("rbf kernel sigma must be positive");
            return;
    }
}

std::string_view kernel_kind_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::linear: return "linear";
        case KernelKind::polynomial_homogeneous: return "polynomial";
        case KernelKind::polynomial_affine: return "polynomial-affine";
        case KernelKind::sigmoid: return "sigmoid";
        case KernelKind::rbf: return "rbf";
    }
    return "linear";
}

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "linear") return KernelKind::linear;
    if (name == "polynomial" || name == "poly" || name == "polynomial-homogeneous")
        return KernelKind::polynomial_homogeneous;
    if (name == "polynomial-affine" || name == "poly-affine") return KernelKind::polynomial_affine;
    if (name == "sigmoid") return KernelKind::sigmoid;
    if (name == "rbf" || name == "gaussian") return KernelKind::rbf;
    throw ValidationError("unknown kernel kind '" + std::string(name) + "'");
}

KernelSpec parse_kernel_spec(std::string_view text) {
    KernelSpec spec;
    auto colon = text.find(':');
    spec.kind = parse_kernel_kind(text.substr(0, colon));
    if (colon != std::string_view::npos) {
        std::string_view rest = text.substr(colon + 1);
        while (!rest.empty()) {
            auto comma = rest.find(',');
            std::string_view item = rest.substr(0, comma);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            auto eq = item.find('=');
            if (eq == std::string_view::npos)
                throw ValidationError("kernel parameter '" + std::string(item) +
                                      "' must look like name=value");
            std::string_view key = item.substr(0, eq);
            double value = parse_number(item.substr(eq + 1), key);
            if (key == "d" || key == "degree") {
                if (value != std::floor(value)) throw ValidationError("kernel degree d must be an integer");
                spec.degree = static_cast<int>(value);
            } else if (key == "alpha") {
                spec.alpha = value;
            } else if (key == "beta") {
                spec.beta = value;
            } else if (key == "sigma") {
                spec.sigma = value;
            } else {
                throw ValidationError("unknown kernel parameter '" + std::string(key) + "'");
            }
        }
    }
    validate(spec);
    return spec;
}

std::string format_kernel_spec(const KernelSpec& spec) {
    std::string out(kernel_kind_name(spec.kind));
    switch (spec.kind) {
        case KernelKind::linear: break;
        case KernelKind::polynomial_homogeneous:
        case KernelKind::polynomial_affine: out += ":d=" + std::to_string(spec.degree); break;
        case KernelKind::sigmoid:
            out += ":alpha=" + io::format_double(spec.alpha) + ",beta=" + io::format_double(spec.beta);
            break;
        case KernelKind::rbf: out += ":sigma=" + io::format_double(spec.sigma); break;
    }
    return out;
}

double kernel_eval(const KernelSpec& spec, const Vector& u, const Vector& v) {
    if (u.size() != v.size())
        throw DimensionError("kernel_eval: vectors have lengths " + std::to_string(u.size()) +
                             " and " + std::to_string(v.size()));
    switch (spec.kind) {
        case KernelKind::linear: return u.dot(v);
        case KernelKind::polynomial_homogeneous: return std::pow(u.dot(v), spec.degree);
        case KernelKind::polynomial_affine: return std::pow(u.dot(v) + 1.0, spec.degree);
        case KernelKind::sigmoid: return std::tanh(spec.alpha * u.dot(v) + spec.beta);
        case KernelKind::rbf:
            return std::exp(-(u - v).squaredNorm() / (2.0 * spec.sigma * spec.sigma));
    }
    return 0.0;
}

Matrix kernel_mode_covariance(const Tensor& x, std::size_t mode, const KernelSpec& spec) {
    if (mode == 0) throw DimensionError("kernel_mode_covariance: the measurement mode has no kernel covariance");
    if (mode >= x.order())
        throw DimensionError("kernel_mode_covariance: mode " + std::to_string(mode) + " out of range");
    validate(spec);
    if (spec.is_linear()) return gram_left(unfold(x, mode));

    // Columns of unfold(x, m) come in runs of I_0: run n is the n-th cluster,
    // so fibers are contiguous segments of the transposed unfolding.
    const Matrix fibers = unfold(x, mode).transpose();
    const auto extent = static_cast<Eigen::Index>(x.dims()[mode]);
    const auto len = static_cast<Eigen::Index>(x.dims()[0]);
    const Eigen::Index clusters = fibers.rows() / len;
    Matrix cov(extent, extent);
    parallel_for(static_cast<std::size_t>(extent), [&](std::size_t row) {
        auto j = static_cast<Eigen::Index>(row);
        for (Eigen::Index k = j; k < extent; ++k) {
            double sum = 0.0;
            for (Eigen::Index n = 0; n < clusters; ++n)
                sum += kernel_eval(spec, fibers.col(j).segment(n * len, len),
                                   fibers.col(k).segment(n * len, len));
            cov(j, k) = sum;
        }
    });
    for (Eigen::Index j = 0; j < extent; ++j)
        for (Eigen::Index k = 0; k < j; ++k) cov(j, k) = cov(k, j);
    return cov;
}

FactorComponents ica_rotation(const Matrix& u, const Matrix& x_unfolded, const IcaConfig& cfg) {
    if (u.rows() != x_unfolded.rows())
        throw DimensionError("ica_rotation: basis has " + std::to_string(u.rows()) +
                             " rows, data has " + std::to_string(x_unfolded.rows()));
    if (u.cols() == 0 || x_unfolded.cols() == 0)
        throw DimensionError("ica_rotation: empty basis or data");
    const Eigen::Index r = u.cols();
    FactorComponents out;
    out.u = u;
    out.w = Matrix::Identity(r, r);
    out.c = u;
    if (r == 1) return out;

    // Whitened coordinates: columns of x are the samples.
    Matrix y = u.transpose() * x_unfolded;
    y.colwise() -= y.rowwise().mean();
    const auto samples = static_cast<double>(y.cols());
    Eigen::SelfAdjointEigenSolver<Matrix> es(y * y.transpose() / samples);
    const double top = es.eigenvalues().maxCoeff();
    Vector scale = es.eigenvalues().unaryExpr(
        [top](double l) { return l > 1e-12 * top && l > 0.0 ? 1.0 / std::sqrt(l) : 0.0; });
    Matrix z = es.eigenvectors() * scale.asDiagonal() * es.eigenvectors().transpose() * y;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    Matrix w(r, r);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < r; ++j) w(i, j) = normal(rng);
    w = symmetric_decorrelation(w);

    for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        Matrix proj = w * z;  // r x N
        Matrix cubed = proj.array().cube().matrix();
        Matrix next = cubed * z.transpose() / samples - 3.0 * w;
        next = symmetric_decorrelation(next);
        double change = 0.0;
        for (Eigen::Index i = 0; i < r; ++i)
            change = std::max(change, std::abs(1.0 - std::abs(next.row(i).dot(w.row(i)))));
        w = std::move(next);
        if (change < cfg.tol) {
            out.w = w;
            out.c = u * w.transpose();
            out.sweeps = sweep;
            return out;
        }
    }
    out.converged = false;
    out.sweeps = cfg.max_sweeps;
    return out;
}

CausalModel k_mpca(const Tensor& d, const TrainingConfig& cfg, std::span<const KernelSpec> specs,
                   const KernelTrainingOptions& options) {
    validate(cfg, d.dims());
    const std::size_t modes = d.order() - 1;
    std::vector<KernelSpec> kernels(specs.begin(), specs.end());
    if (kernels.empty()) kernels.assign(modes, KernelSpec{});
    if (kernels.size() != modes)
        throw ValidationError("kernels: expected " + std::to_string(modes) + " entries, got " +
                              std::to_string(kernels.size()));
    bool all_linear = true;
    for (const auto& k : kernels) {
        validate(k);
        all_linear = all_linear && k.is_linear();
    }
    if (cfg.engine == SubspaceEngine::hebbian && !all_linear)
        throw ValidationError("engine: the hebbian engine supports linear kernels only");

    struct Cache {
        std::mutex mu;
        Tensor x;
        Matrix cov;
    };
    auto caches = std::make_shared<std::vector<Cache>>(d.order());

    auto covariance = [&](const Tensor& x, std::size_t m) {
        const KernelSpec& spec = kernels[m - 1];
        if (!options.cache_covariance) return kernel_mode_covariance(x, m, spec);
        Cache& c = (*caches)[m];
        std::lock_guard lock(c.mu);
        if (!(c.x == x)) {
            c.cov = kernel_mode_covariance(x, m, spec);
            c.x = x;
        }
        return c.cov;
    };

    SubspaceStep step = [&](const Tensor& x, std::size_t m, std::size_t r, const ModeUpdate& prev) {
        ModeUpdate upd;
        if (m == 0) return svd_step(x, 0, r);
        const KernelSpec& spec = kernels[m - 1];
        if (cfg.engine == SubspaceEngine::hebbian) {
            HebbianResult h = hebbian_subspace(unfold(x, m), r, cfg.hebbian, &prev.factor);
            upd.factor = std::move(h.v);
            if (!h.converged)
                upd.warnings.push_back("hebbian learner for mode " + std::to_string(m) +
                                       " stopped at the epoch limit");
        } else {
            Matrix cov = covariance(x, m);
            if (spec.kind == KernelKind::sigmoid) {
                Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
                if (es.eigenvalues().minCoeff() < -1e-10 * std::abs(cov.trace()))
                    upd.warnings.push_back("sigmoid kernel covariance of mode " +
                                           std::to_string(m) +
                                           " is indefinite; negative eigenvalues clipped to zero");
            }
            upd.factor = leading_eigenpairs(cov, r).vectors;
        }
        if (options.analysis == ComponentAnalysis::ica) {
            FactorComponents fc = ica_rotation(upd.factor, unfold(x, m), options.ica);
            if (!fc.converged)
                upd.warnings.push_back("ica rotation for mode " + std::to_string(m) +
                                       " did not converge; identity rotation used");
            upd.factor = std::move(fc.c);
            upd.forward = left_inverse(upd.factor);
        } else {
            upd.forward = upd.factor.transpose();
        }
        return upd;
    };

    Centered c = center_observations(d);
    CausalModel model = make_model(run_als(c.data, cfg, step), c.mean, cfg);
    model.kernels = kernels;
    model.provenance.algorithm = options.analysis == ComponentAnalysis::ica ? "k-mica" : "k-mpca";
    return model;
}

}  // namespace mfa
