#include "mfa/synth.hpp"

#include "mfa/error.hpp"
#include "mfa/linalg.hpp"
#include "mfa/parallel.hpp"

#include <cmath>
#include <random>
#include <string>

namespace mfa {

namespace {

enum Stream : std::uint64_t { regime_stream = 1, core_stream, factor_stream, combo_stream, mode_noise_stream };

Matrix gaussian(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

// Orthonormal columns; also orthogonal to the ones vector when there is room,
// so data built from them has zero mean observation.
Matrix orthonormal_factor(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
    if (cols >= rows) return orthonormal_basis(gaussian(seed, rows, cols));
    Matrix g(rows, cols + 1);
    g.col(0).setOnes();
    g.rightCols(cols) = gaussian(seed, rows, cols);
    return orthonormal_basis(g).rightCols(cols);
}

// Symmetric square root used to color unit Gaussian draws.
Matrix covariance_root(const Matrix& cov, const std::string& field) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    const Vector& ev = es.eigenvalues();
    if (ev.minCoeff() < -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff()))
        throw ValidationError(field + ": covariance is not positive semidefinite");
    return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Tensor simple_noise(const Dims& dims, std::uint64_t base, double scale) {
    Tensor e(dims);
    const std::size_t len = dims[0];
    const std::size_t combos = e.size() / len;
    parallel_for(combos, [&](std::size_t c) {
        std::mt19937_64 rng(derive_seed(base, combo_stream, c));
        std::normal_distribution<double> normal(0.0, scale);
        for (std::size_t i = 0; i < len; ++i) e.values()[c * len + i] = normal(rng);
    });
    return e;
}

// e_{i_1..i_M} = Z x_0 E_0 x_1 eps_{i_1}^T ... x_M eps_{i_M}^T with a
// superdiagonal Z, so entry i_0 is sum_k E_0(i_0,k) prod_m eps_{i_m}(k).
Tensor structured_noise(const Dims& dims, std::uint64_t base, const NoiseSpec& noise) {
    const auto k = static_cast<Eigen::Index>(noise.rank);
    std::vector<Matrix> eps(dims.size());
    for (std::size_t m = 0; m < dims.size(); ++m) {
        Matrix draws = gaussian(derive_seed(base, mode_noise_stream, m), static_cast<Eigen::Index>(dims[m]), k);
        if (!noise.covariances.empty())
            draws = draws * covariance_root(noise.covariances[m], "noise.covariances[" + std::to_string(m) + "]");
        eps[m] = std::move(draws);
    }
    Tensor e(dims);
    const std::size_t len = dims[0];
    const std::size_t combos = e.size() / len;
    parallel_for(combos, [&](std::size_t c) {
        Vector path = Vector::Ones(k);
        std::size_t rest = c;
        for (std::size_t m = 1; m < dims.size(); ++m) {
            path = path.cwiseProduct(eps[m].row(static_cast<Eigen::Index>(rest % dims[m])).transpose());
            rest /= dims[m];
        }
        Eigen::Map<Vector>(e.values().data() + c * len, static_cast<Eigen::Index>(len)) =
            noise.scale * (eps[0] * path);
    });
    return e;
}

SynthDataset generate_one(const SynthSpec& spec, std::size_t regime) {
    const std::uint64_t base = derive_seed(spec.seed, regime_stream, regime);
    const std::size_t modes = spec.extents.size();
    SynthDataset out;

    Dims core_dims{spec.measurements};
    core_dims.insert(core_dims.end(), spec.ranks.begin(), spec.ranks.end());
    Matrix core = gaussian(derive_seed(base, core_stream, 0), static_cast<Eigen::Index>(spec.measurements),
                           static_cast<Eigen::Index>(product(spec.ranks)));
    out.truth.core = Tensor(core_dims, std::vector<double>(core.data(), core.data() + core.size()));

    Tensor signal = out.truth.core;
    for (std::size_t m = 0; m < modes; ++m) {
        Matrix u = orthonormal_factor(derive_seed(base, factor_stream, m + 1),
                                      static_cast<Eigen::Index>(spec.extents[m]),
                                      static_cast<Eigen::Index>(spec.ranks[m]));
        bool warped = !spec.warp.empty() && spec.warp[m];
        signal = mode_multiply(signal, warped ? Matrix(u.array().cube()) : u, m + 1);
        out.truth.factors.push_back(std::move(u));
    }
    out.truth.mean = Vector::Zero(static_cast<Eigen::Index>(spec.measurements));
    out.truth.ranks = spec.ranks;
    out.truth.kernels.assign(modes, KernelSpec{});
    out.truth.provenance.algorithm = "synth";
    out.truth.provenance.converged = true;

    switch (spec.noise.kind) {
        case NoiseKind::none: out.noise = Tensor(signal.dims()); break;
        case NoiseKind::simple:
            out.noise = simple_noise(signal.dims(), base, spec.noise.relative ? 1.0 : spec.noise.scale);
            break;
        case NoiseKind::structured: {
            NoiseSpec ns = spec.noise;
            if (ns.relative) ns.scale = 1.0;
            out.noise = structured_noise(signal.dims(), base, ns);
            break;
        }
    }
    if (spec.noise.kind != NoiseKind::none && spec.noise.relative) {
        double enorm = out.noise.norm();
        double factor = enorm > 0.0 ? spec.noise.scale * signal.norm() / enorm : 0.0;
        for (auto& v : out.noise.values()) v *= factor;
    }
    out.data = std::move(signal);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data.values()[i] += out.noise.values()[i];
    return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ stream) ^ index);
}

void validate(const SynthSpec& spec) {
    if (spec.measurements == 0) throw ValidationError("measurements: must be at least 1");
    if (spec.extents.empty()) throw ValidationError("extents: at least one causal factor is required");
    if (spec.ranks.size() != spec.extents.size())
        throw ValidationError("ranks: expected " + std::to_string(spec.extents.size()) + " entries, got " +
                              std::to_string(spec.ranks.size()));
    for (std::size_t m = 0; m < spec.extents.size(); ++m) {
        if (spec.extents[m] == 0)
            throw ValidationError("extents[" + std::to_string(m) + "]: must be at least 1");
        if (spec.ranks[m] == 0 || spec.ranks[m] > spec.extents[m])
            throw ValidationError("ranks[" + std::to_string(m) + "]: rank " + std::to_string(spec.ranks[m]) +
                                  " must be in [1, " + std::to_string(spec.extents[m]) + "]");
    }
    if (!spec.warp.empty() && spec.warp.size() != spec.extents.size())
        throw ValidationError("warp: expected " + std::to_string(spec.extents.size()) + " entries");
    if (spec.regimes == 0) throw ValidationError("regimes: must be at least 1");
    const NoiseSpec& n = spec.noise;
    if (!(n.scale >= 0.0) || !std::isfinite(n.scale))
        throw ValidationError("noise.scale: must be finite and non-negative");
    if (n.kind == NoiseKind::structured) {
        if (n.rank == 0) throw ValidationError("noise.rank: must be at least 1");
        if (!n.covariances.empty()) {
            if (n.covariances.size() != spec.extents.size() + 1)
                throw ValidationError("noise.covariances: expected one matrix per mode 0.." +
                                      std::to_string(spec.extents.size()));
            for (std::size_t m = 0; m < n.covariances.size(); ++m) {
                const Matrix& c = n.covariances[m];
                std::string field = "noise.covariances[" + std::to_string(m) + "]";
                if (c.rows() != static_cast<Eigen::Index>(n.rank) || c.cols() != c.rows())
                    throw ValidationError(field + ": must be " + std::to_string(n.rank) + "x" +
                                          std::to_string(n.rank));
                if (!c.allFinite() || (c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.norm()))
                    throw ValidationError(field + ": must be finite and symmetric");
                covariance_root(c, field);
            }
        }
    }
}

SynthDataset generate(const SynthSpec& spec) {
    validate(spec);
    return generate_one(spec, 0);
}

std::vector<SynthDataset> generate_regimes(const SynthSpec& spec) {
    validate(spec);
    std::vector<SynthDataset> out;
    for (std::size_t r = 0; r < spec.regimes; ++r) out.push_back(generate_one(spec, r));
    return out;
}

}  // namespace mfa
