#include <gtest/gtest.h>

#include "mfa/error.hpp"
#include "mfa/factorization.hpp"
#include "mfa/kernels.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <random>

namespace {

using namespace mfa;
using mfa::testing::max_abs_diff;
using mfa::testing::random_matrix;
using mfa::testing::random_orthonormal;
using mfa::testing::random_tensor;

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

double min_eigenvalue(const Matrix& m) {
    return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double leading_fraction(const Matrix& cov) {
    Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(cov, Eigen::EigenvaluesOnly).eigenvalues();
    return ev.maxCoeff() / ev.cwiseMax(0.0).sum();
}

// Mode-0 fibers trace the twisted cubic (t, t^2, t^3) over mode 1, scaled
// by 1 + k over mode 2.
Tensor curve_tensor(std::size_t points) {
    Tensor t({3, points, 2});
    for (std::size_t j = 0; j < points; ++j) {
        double s = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(points - 1);
        for (std::size_t k = 0; k < 2; ++k) {
            double scale = 1.0 + static_cast<double>(k);
            t({0, j, k}) = scale * s;
            t({1, j, k}) = scale * s * s;
            t({2, j, k}) = scale * s * s * s;
        }
    }
    return t;
}

TEST(KernelEval, HandValues) {
    KernelSpec linear;
    EXPECT_EQ(kernel_eval(linear, vec({1, 2}), vec({3, 4})), 11.0);

    KernelSpec affine{KernelKind::polynomial_affine};
    affine.degree = 2;
    EXPECT_EQ(kernel_eval(affine, vec({1, 0}), vec({1, 1})), 4.0);

    KernelSpec homogeneous{KernelKind::polynomial_homogeneous};
    homogeneous.degree = 3;
    EXPECT_EQ(kernel_eval(homogeneous, vec({1, 1}), vec({2, 0})), 8.0);

    KernelSpec sigmoid{KernelKind::sigmoid};
    sigmoid.alpha = 0.5;
    sigmoid.beta = -1.0;
    EXPECT_DOUBLE_EQ(kernel_eval(sigmoid, vec({1, 2}), vec({3, 4})), std::tanh(4.5));
}

TEST(KernelEval, RbfOfIdenticalPointsIsOne) {
    std::mt19937_64 rng(301);
    for (double sigma : {0.1, 1.0, 7.5}) {
        KernelSpec rbf{KernelKind::rbf};
        rbf.sigma = sigma;
        Vector u = mfa::testing::random_vector(rng, 5);
        EXPECT_EQ(kernel_eval(rbf, u, u), 1.0);
    }
    KernelSpec rbf{KernelKind::rbf};
    rbf.sigma = 2.0;
    EXPECT_DOUBLE_EQ(kernel_eval(rbf, vec({0, 0}), vec({3, 4})), std::exp(-25.0 / 8.0));
}

TEST(KernelEval, SymmetricInItsArguments) {
    std::mt19937_64 rng(302);
    Vector u = mfa::testing::random_vector(rng, 4), v = mfa::testing::random_vector(rng, 4);
    for (const char* text : {"linear", "polynomial:d=3", "poly-affine:d=2", "sigmoid:alpha=0.3,beta=0.1",
                             "rbf:sigma=0.7"}) {
        KernelSpec spec = parse_kernel_spec(text);
        EXPECT_EQ(kernel_eval(spec, u, v), kernel_eval(spec, v, u)) << text;
    }
}

TEST(KernelEval, LengthMismatch) {
    EXPECT_THROW(kernel_eval({}, vec({1, 2}), vec({1, 2, 3})), DimensionError);
}

TEST(KernelSpecText, RoundTrip) {
    for (const char* text : {"linear", "polynomial:d=3", "polynomial-affine:d=2",
                             "sigmoid:alpha=0.5,beta=-1", "rbf:sigma=1.5"}) {
        EXPECT_EQ(format_kernel_spec(parse_kernel_spec(text)), text);
    }
    KernelSpec spec = parse_kernel_spec("poly-affine:d=4");
    EXPECT_EQ(spec.kind, KernelKind::polynomial_affine);
    EXPECT_EQ(spec.degree, 4);
}

TEST(KernelSpecText, RejectsBadInput) {
    EXPECT_THROW(parse_kernel_spec("cosine"), ValidationError);
    EXPECT_THROW(parse_kernel_spec("rbf:sigma=0"), ValidationError);
    EXPECT_THROW(parse_kernel_spec("rbf:sigma=-1"), ValidationError);
    EXPECT_THROW(parse_kernel_spec("rbf:width=1"), ValidationError);
    EXPECT_THROW(parse_kernel_spec("polynomial:d=0"), ValidationError);
    EXPECT_THROW(parse_kernel_spec("polynomial:d=1.5"), ValidationError);
    EXPECT_THROW(parse_kernel_spec("rbf:sigma"), ValidationError);
    EXPECT_THROW(parse_kernel_spec("rbf:sigma=abc"), ValidationError);
}

TEST(KernelCovariance, LinearEqualsUnfoldingGram) {
    std::mt19937_64 rng(303);
    Tensor x = random_tensor(rng, {4, 3, 2});
    Matrix x1 = unfold(x, 1);
    EXPECT_LE((kernel_mode_covariance(x, 1, {}) - x1 * x1.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KernelCovariance, RbfMatchesDoubleLoop) {
    Tensor x({2, 2, 2}, {0.5, -1.0, 2.0, 0.25, -0.75, 1.5, 0.0, 3.0});
    KernelSpec rbf{KernelKind::rbf};
    for (std::size_t mode : {1u, 2u}) {
        Matrix oracle = Matrix::Zero(2, 2);
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t other = 0; other < 2; ++other) {
                    double dist = 0.0;
                    for (std::size_t i = 0; i < 2; ++i) {
                        double a = mode == 1 ? x({i, j, other}) : x({i, other, j});
                        double b = mode == 1 ? x({i, k, other}) : x({i, other, k});
                        dist += (a - b) * (a - b);
                    }
                    oracle(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) +=
                        std::exp(-dist / 2.0);
                }
        EXPECT_LE((kernel_mode_covariance(x, mode, rbf) - oracle).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(KernelCovariance, DiagonalSumsSelfKernel) {
    std::mt19937_64 rng(304);
    Tensor x = random_tensor(rng, {3, 4, 5});
    KernelSpec poly = parse_kernel_spec("polynomial-affine:d=2");
    Matrix cov = kernel_mode_covariance(x, 2, poly);
    for (std::size_t k = 0; k < 5; ++k) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            Vector f(3);
            for (std::size_t i = 0; i < 3; ++i) f(static_cast<Eigen::Index>(i)) = x({i, j, k});
            sum += kernel_eval(poly, f, f);
        }
        EXPECT_NEAR(cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)), sum, 1e-12);
    }
}

TEST(KernelCovariance, SymmetricAndPositiveSemidefinite) {
    std::mt19937_64 rng(305);
    Tensor x = random_tensor(rng, {3, 6, 4});
    for (const char* text : {"linear", "polynomial:d=2", "polynomial-affine:d=3", "rbf:sigma=0.8"}) {
        Matrix cov = kernel_mode_covariance(x, 1, parse_kernel_spec(text));
        EXPECT_EQ(cov, cov.transpose()) << text;
        EXPECT_GE(min_eigenvalue(cov), -1e-10 * cov.trace()) << text;
    }
}

TEST(KernelCovariance, MeasurementModeIsRejected) {
    std::mt19937_64 rng(306);
    Tensor x = random_tensor(rng, {3, 2, 2});
    EXPECT_THROW(kernel_mode_covariance(x, 0, {}), DimensionError);
    EXPECT_THROW(kernel_mode_covariance(x, 3, {}), DimensionError);
}

TEST(KernelCovariance, RbfConcentratesEnergyOnCurveData) {
    // sigma is the diameter of the fiber cloud. Much narrower widths spread
    // the spectrum and lose the comparison on this curve.
    Tensor x = center_observations(curve_tensor(15)).data;
    Matrix fibers = x.mode0();
    double diameter = 0.0;
    for (Eigen::Index a = 0; a < fibers.cols(); ++a)
        for (Eigen::Index b = 0; b < a; ++b)
            diameter = std::max(diameter, (fibers.col(a) - fibers.col(b)).norm());
    KernelSpec rbf{KernelKind::rbf};
    rbf.sigma = diameter;
    double linear_fraction = leading_fraction(kernel_mode_covariance(x, 1, {}));
    double rbf_fraction = leading_fraction(kernel_mode_covariance(x, 1, rbf));
    EXPECT_GE(rbf_fraction, linear_fraction);
}

TEST(KMpca, LinearKernelsReproduceMModeSvdBitForBit) {
    std::mt19937_64 rng(307);
    Tensor d = random_tensor(rng, {6, 5, 4, 3});
    TrainingConfig cfg;
    cfg.ranks = {3, 2, 2};
    CausalModel ref = m_mode_svd(d, cfg);
    CausalModel kernel = k_mpca(d, cfg, {});
    ASSERT_EQ(kernel.factors.size(), ref.factors.size());
    for (std::size_t m = 0; m < ref.factors.size(); ++m) EXPECT_EQ(kernel.factors[m], ref.factors[m]);
    EXPECT_EQ(kernel.core, ref.core);
    EXPECT_EQ(kernel.provenance.final_cost, ref.provenance.final_cost);
    EXPECT_EQ(kernel.provenance.algorithm, "k-mpca");
    EXPECT_EQ(kernel.kernels.size(), 3u);
}

TEST(KMpca, CovarianceCacheDoesNotChangeTheResult) {
    std::mt19937_64 rng(308);
    Tensor d = random_tensor(rng, {4, 5, 4});
    TrainingConfig cfg;
    cfg.ranks = {2, 2};
    std::vector<KernelSpec> specs{parse_kernel_spec("rbf:sigma=2"), parse_kernel_spec("poly-affine:d=2")};
    KernelTrainingOptions cached;
    cached.cache_covariance = true;
    CausalModel a = k_mpca(d, cfg, specs);
    CausalModel b = k_mpca(d, cfg, specs, cached);
    EXPECT_EQ(a.factors, b.factors);
    EXPECT_EQ(a.core, b.core);
}

TEST(KMpca, FullRankLinearReconstructsExactly) {
    std::mt19937_64 rng(309);
    Tensor d = random_tensor(rng, {3, 4, 3});
    TrainingConfig cfg;
    cfg.ranks = {4, 3};
    CausalModel model = k_mpca(d, cfg, {});
    EXPECT_LE(cost_evaluate(d, model), 1e-10 * d.norm());
}

TEST(KMpca, NonlinearFactorsAreTopKernelEigenvectors) {
    Tensor d = curve_tensor(10);
    TrainingConfig cfg;
    cfg.ranks = {3, 2};
    cfg.max_iters = 50;
    std::vector<KernelSpec> specs{parse_kernel_spec("rbf:sigma=1"), KernelSpec{}};
    CausalModel model = k_mpca(d, cfg, specs);
    const Matrix& u1 = model.factors[0];
    EXPECT_LE((u1.transpose() * u1 - Matrix::Identity(3, 3)).norm(), 1e-8);
    EXPECT_EQ(model.kernels[0].kind, KernelKind::rbf);
    EXPECT_EQ(model.core.dims(), (Dims{3, 3, 2}));
}

TEST(KMpca, HebbianEngineRequiresLinearKernels) {
    std::mt19937_64 rng(310);
    Tensor d = random_tensor(rng, {3, 4, 3});
    TrainingConfig cfg;
    cfg.ranks = {2, 2};
    cfg.engine = SubspaceEngine::hebbian;
    std::vector<KernelSpec> specs{parse_kernel_spec("rbf:sigma=1"), KernelSpec{}};
    EXPECT_THROW(k_mpca(d, cfg, specs), ValidationError);
    std::vector<KernelSpec> short_list{KernelSpec{}};
    cfg.engine = SubspaceEngine::svd;
    EXPECT_THROW(k_mpca(d, cfg, short_list), ValidationError);
}

TEST(KMpca, SigmoidIndefiniteCovarianceIsFlagged) {
    std::mt19937_64 rng(311);
    Tensor d = random_tensor(rng, {3, 5, 3});
    TrainingConfig cfg;
    cfg.ranks = {2, 2};
    cfg.max_iters = 3;
    std::vector<KernelSpec> specs{parse_kernel_spec("sigmoid:alpha=1,beta=-2"), KernelSpec{}};
    CausalModel model = k_mpca(d, cfg, specs);
    bool flagged = false;
    for (const auto& w : model.provenance.warnings) flagged = flagged || w.find("sigmoid") != std::string::npos;
    EXPECT_TRUE(flagged);
}

TEST(Ica, GaussianInputsKeepConsistency) {
    std::mt19937_64 rng(312);
    Matrix u = random_orthonormal(rng, 6, 3);
    Matrix x = u * random_matrix(rng, 3, 400);
    FactorComponents fc = ica_rotation(u, x);
    EXPECT_LE((fc.c * fc.w - u).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((fc.w.transpose() * fc.w - Matrix::Identity(3, 3)).norm(), 1e-8);
}

TEST(Ica, UnmixesTwoUniformSources) {
    std::mt19937_64 rng(313);
    std::uniform_real_distribution<double> uniform(-std::sqrt(3.0), std::sqrt(3.0));
    const Eigen::Index n = 2000;
    Matrix s(2, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        s(0, j) = uniform(rng);
        s(1, j) = uniform(rng);
    }
    const double angle = 0.6;
    Matrix mix(2, 2);
    mix << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    Matrix u = random_orthonormal(rng, 5, 2);
    FactorComponents fc = ica_rotation(u, u * mix * s);
    ASSERT_TRUE(fc.converged);
    Matrix recovered = fc.w * (u.transpose() * (u * mix * s));
    for (Eigen::Index i = 0; i < 2; ++i) {
        double best = 0.0;
        for (Eigen::Index k = 0; k < 2; ++k) {
            Vector a = recovered.row(i).transpose().array() - recovered.row(i).mean();
            Vector b = s.row(k).transpose().array() - s.row(k).mean();
            best = std::max(best, std::abs(a.dot(b)) / (a.norm() * b.norm()));
        }
        EXPECT_GE(best, 0.95) << "component " << i;
    }
    EXPECT_LE((fc.w.transpose() * fc.w - Matrix::Identity(2, 2)).norm(), 1e-8);
    EXPECT_LE(max_principal_angle(fc.c, u), 1e-8);
}

TEST(Ica, SingleComponentIsIdentity) {
    std::mt19937_64 rng(314);
    Matrix u = random_orthonormal(rng, 4, 1);
    FactorComponents fc = ica_rotation(u, u * random_matrix(rng, 1, 20));
    EXPECT_EQ(fc.w, Matrix::Identity(1, 1));
    EXPECT_EQ(fc.c, u);
}

TEST(Ica, NonConvergenceFallsBackToIdentity) {
    std::mt19937_64 rng(315);
    Matrix u = random_orthonormal(rng, 5, 3);
    IcaConfig cfg;
    cfg.max_sweeps = 1;
    cfg.tol = 0.0;
    FactorComponents fc = ica_rotation(u, u * random_matrix(rng, 3, 50), cfg);
    EXPECT_FALSE(fc.converged);
    EXPECT_EQ(fc.w, Matrix::Identity(3, 3));
    EXPECT_EQ(fc.c, u);
}

TEST(KMica, FactorsSpanTheMpcaSubspace) {
    std::mt19937_64 rng(316);
    Tensor d = random_tensor(rng, {4, 6, 5});
    TrainingConfig cfg;
    cfg.ranks = {3, 2};
    KernelTrainingOptions ica;
    ica.analysis = ComponentAnalysis::ica;
    CausalModel mica = k_mpca(d, cfg, {}, ica);
    CausalModel mpca = m_mode_svd(d, cfg);
    EXPECT_EQ(mica.provenance.algorithm, "k-mica");
    for (std::size_t m = 0; m < 2; ++m)
        EXPECT_LE(max_principal_angle(mica.factors[m], mpca.factors[m]), 1e-6);
    EXPECT_LE(std::abs(cost_evaluate(d, mica, {}) - cost_evaluate(d, mpca, {})), 1e-8 * d.norm());
}

}  // namespace
