#include "mfa/neural.hpp"

#include "mfa/error.hpp"
#include "mfa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mfa {

namespace {

constexpr double kDivergenceNorm = 1e6;

void check_config(const HebbianConfig& cfg) {
    if (!(cfg.eta >= 0.0) || !std::isfinite(cfg.eta))
        throw ValidationError("hebbian.eta must be a finite value >= 0 (0 = automatic)");
    if (cfg.epochs == 0) throw ValidationError("hebbian.epochs must be at least 1");
    if (!(cfg.tol > 0.0)) throw ValidationError("hebbian.tol must be positive");
    if (cfg.patience == 0) throw ValidationError("hebbian.patience must be at least 1");
}

// Removes the span of basis from v (two Gram-Schmidt passes).
void deflate(Vector& v, const Matrix& basis) {
    if (basis.cols() == 0) return;
    for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
}

Vector random_unit(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng);
    return v;
}

// Starting weights for neuron r, orthogonal to the trained ones.
Vector initial_weights(std::mt19937_64& rng, const Matrix& trained, Eigen::Index n,
                       const Matrix* warm, Eigen::Index r) {
    Vector v = warm && r < warm->cols() ? Vector(warm->col(r)) : random_unit(rng, n);
    deflate(v, trained);
    // A warm column already inside the trained span falls back to a draw.
    for (int attempt = 0; v.norm() < 1e-8 && attempt < 16; ++attempt) {
        v = random_unit(rng, n);
        deflate(v, trained);
    }
    return v / v.norm();
}

Vector renormalize(const Vector& w) {
    double n = w.norm();
    if (!std::isfinite(n) || n > kDivergenceNorm)
        throw DivergenceError("hebbian update diverged (||v + dv|| = " + std::to_string(n) +
                              "); use a smaller learning rate eta");
    return w / n;
}

}  // namespace

HebbianResult hebbian_subspace(const Matrix& x, std::size_t r, const HebbianConfig& cfg,
                               const Matrix* warm_start) {
    check_config(cfg);
    const Eigen::Index n = x.rows();
    if (r == 0 || r > static_cast<std::size_t>(std::min(x.rows(), x.cols())))
        throw DimensionError("hebbian_subspace: rank " + std::to_string(r) + " not in [1, " +
                             std::to_string(std::min(x.rows(), x.cols())) + "]");
    if (!x.allFinite()) throw NonFiniteError("hebbian_subspace: input has non-finite entries");
    if (warm_start && warm_start->rows() != n)
        throw DimensionError("hebbian_subspace: warm start has the wrong row count");

    const double energy = x.squaredNorm();
    const double eta = cfg.eta > 0.0 ? cfg.eta : (energy > 0.0 ? 1.0 / energy : 1.0);
    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    HebbianResult out;
    out.v = Matrix::Zero(n, static_cast<Eigen::Index>(r));
    out.sigma = Vector::Zero(static_cast<Eigen::Index>(r));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(r); ++k) {
        const Matrix trained = out.v.leftCols(k);
        Vector v = initial_weights(rng, trained, n, warm_start, k);
        std::size_t streak = 0;
        std::size_t epoch = 0;
        while (epoch < cfg.epochs && streak < cfg.patience) {
            ++epoch;
            Vector before = v;
            if (!cfg.stochastic) {
                Vector g = x * (x.transpose() * v);  // x times the code
                deflate(g, trained);
                v = renormalize(v + eta * g);
            } else {
                std::shuffle(order.begin(), order.end(), rng);
                for (Eigen::Index j : order) {
                    double code = x.col(j).dot(v);
                    Vector g = code * x.col(j);
                    deflate(g, trained);
                    v = renormalize(v + eta * g);
                }
            }
            streak = (v - before).norm() < cfg.tol ? streak + 1 : 0;
        }
        if (streak < cfg.patience) out.converged = false;
        out.epochs = std::max(out.epochs, epoch);
        deflate(v, trained);
        v /= v.norm();
        out.v.col(k) = v;
        out.sigma(k) = (x.transpose() * v).norm();
    }
    normalize_column_signs(out.v);
    return out;
}

AutoencoderResult core_via_autoencoder(const Tensor& d, std::span<const Matrix> factors,
                                       const HebbianConfig& cfg) {
    check_config(cfg);
    if (d.order() != factors.size() + 1)
        throw DimensionError("core_via_autoencoder: tensor has order " +
                             std::to_string(d.order()) + " but " +
                             std::to_string(factors.size()) + " factors were given");
    Dims core_dims{d.dims()[0]};
    for (std::size_t k = 0; k < factors.size(); ++k) {
        if (static_cast<std::size_t>(factors[k].rows()) != d.dims()[k + 1])
            throw DimensionError("core_via_autoencoder: factor " + std::to_string(k + 1) +
                                 " does not match its mode extent");
        core_dims.push_back(static_cast<std::size_t>(factors[k].cols()));
    }

    AutoencoderResult out;
    if (!cfg.stochastic) {
        // Least squares against the code (U_M (x) ... (x) U_1)^T separates
        // into one left inverse per mode.
        Tensor core = d;
        for (std::size_t k = 0; k < factors.size(); ++k)
            core = mode_multiply(core, left_inverse(factors[k]), k + 1);
        out.core = std::move(core);
        out.epochs = 1;
        return out;
    }

    // One observation per step. Each column j of the code matrix is the
    // Kronecker code of one factor combination. The step uses the SAGA
    // running gradient table so a constant learning rate converges to the
    // least-squares decoder instead of hovering around it.
    Matrix kron = factors.back();
    for (std::size_t k = factors.size() - 1; k-- > 0;) kron = kronecker(kron, factors[k]);
    const Matrix code = kron.transpose();  // prod R x prod I
    const auto obs = d.mode0();
    const Eigen::Index count = code.cols();
    const double lip = code.colwise().squaredNorm().maxCoeff();

    Matrix w = Matrix::Zero(obs.rows(), code.rows());
    out.core = Tensor(core_dims);
    if (lip == 0.0 || obs.norm() == 0.0) return out;

    const double eta = cfg.eta > 0.0 ? cfg.eta : 1.0 / (3.0 * lip);
    Matrix stored = Matrix::Zero(obs.rows(), count);  // residual per observation
    Matrix average = Matrix::Zero(w.rows(), w.cols());
    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    std::size_t streak = 0;
    std::size_t epoch = 0;
    while (epoch < cfg.epochs && streak < cfg.patience) {
        ++epoch;
        Matrix before = w;
        std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index j : order) {
            Vector residual = obs.col(j) - w * code.col(j);
            Matrix change = (residual - stored.col(j)) * code.col(j).transpose();
            w += eta * (change + average);
            average += change / static_cast<double>(count);
            stored.col(j) = residual;
        }
        if (!w.allFinite())
            throw DivergenceError("autoencoder core fit diverged; use a smaller learning rate eta");
        double moved = (w - before).cwiseAbs().maxCoeff();
        streak = moved <= cfg.tol * (1.0 + w.cwiseAbs().maxCoeff()) ? streak + 1 : 0;
    }
    out.converged = streak >= cfg.patience;
    out.epochs = epoch;
    std::copy(w.data(), w.data() + w.size(), out.core.values().begin());
    return out;
}

}  // namespace mfa
