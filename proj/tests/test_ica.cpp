#include "support.hpp"

#include "tailica/error.hpp"
#include "tailica/ica.hpp"
#include "tailica/tailcov.hpp"
#include "tailica/whiten.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

using namespace tailica;
using tailica::testing::make_panel;

namespace {

struct Mixture {
    SamplePanel white;
    Eigen::MatrixXd mixing;  ///< whitened-space mixing: white ~ sources * mixing^T
};

// Mixes unit-variance sources by A, whitens, and returns the effective mixing P A.
Mixture mix_and_whiten(const Eigen::MatrixXd& sources, const Eigen::MatrixXd& A) {
    const SamplePanel x = make_panel(sources * A.transpose());
    const WhiteningTransform t = fit_whitening(x, x.cols());
    return {apply_whitening(t, x), t.projection * A};
}

Eigen::MatrixXd unit_laplace(Eigen::Index m, Eigen::Index d, std::mt19937_64& rng) {
    std::vector<std::vector<double>> cols;
    for (Eigen::Index j = 0; j < d; ++j) cols.push_back(tailica::testing::laplace(std::size_t(m), std::sqrt(0.5), rng));
    return tailica::testing::columns(cols);
}

Eigen::MatrixXd unit_student(Eigen::Index m, Eigen::Index d, double nu, std::mt19937_64& rng) {
    std::vector<std::vector<double>> cols;
    for (Eigen::Index j = 0; j < d; ++j) cols.push_back(tailica::testing::student_t(std::size_t(m), nu, rng));
    return tailica::testing::columns(cols);
}

Eigen::Matrix2d rotation(double angle) {
    Eigen::Matrix2d r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

double orthonormality(const Eigen::MatrixXd& W) {
    return (W.transpose() * W - Eigen::MatrixXd::Identity(W.cols(), W.cols())).cwiseAbs().maxCoeff();
}

SamplePanel exactly_white(Eigen::Index m, Eigen::Index d, std::mt19937_64& rng) {
    const SamplePanel x = make_panel(tailica::testing::gaussian_matrix(m, d, rng));
    return apply_whitening(fit_whitening(x, d), x);
}

}  // namespace

TEST(ContrastSpec, DerivativesMatchFiniteDifferences) {
    const double h = 1e-5;
    for (int k : {1, 2, 3, 5}) {
        const ContrastSpec c(k);
        for (double u = -2.0; u <= 2.0; u += 0.05) {
            EXPECT_LT(std::abs(c.g(u) - (c.G(u + h) - c.G(u - h)) / (2 * h)), 1e-6) << "k=" << k << " u=" << u;
            EXPECT_LT(std::abs(c.g_prime(u) - (c.g(u + h) - c.g(u - h)) / (2 * h)), 1e-6) << "k=" << k << " u=" << u;
        }
    }
    const ContrastSpec c2(2);
    EXPECT_EQ(c2.G(2.0), 4.0);
    EXPECT_EQ(c2.g(-2.0), -8.0);
    EXPECT_EQ(c2.g_prime(2.0), 12.0);
    EXPECT_THROW(ContrastSpec(0), std::invalid_argument);
}

TEST(AmariIndex, Examples) {
    Eigen::Matrix3d perm;
    perm << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    EXPECT_EQ(amari_index(perm, Eigen::Matrix3d::Identity()), 0.0);
    Eigen::Matrix3d signed_perm = perm;
    signed_perm(2, 0) = -3.0;
    EXPECT_EQ(amari_index(signed_perm, Eigen::Matrix3d::Identity()), 0.0);
    // W^T A = ones(2, 2) is singular; its invertible neighbours approach 1.
    EXPECT_THROW(amari_index(Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Ones()), NumericalError);
    Eigen::Matrix2d near_ones;
    near_ones << 1, 1, 1, 1 - 1e-9;
    EXPECT_NEAR(amari_index(Eigen::Matrix2d::Identity(), near_ones), 1.0, 1e-8);
    EXPECT_GT(amari_index(rotation(0.3), Eigen::Matrix2d::Identity()), 0.0);
}

TEST(RandomOrthogonal, OrthonormalAndSeeded) {
    for (Eigen::Index d : {1, 2, 7, 30}) {
        const Eigen::MatrixXd Q = random_orthogonal(d, 5);
        EXPECT_LT(orthonormality(Q), 1e-13);
        EXPECT_EQ(Q, random_orthogonal(d, 5));
    }
    EXPECT_NE(random_orthogonal(4, 1), random_orthogonal(4, 2));
}

TEST(SymmetricOrthogonalize, MatchesInverseSquareRootForm) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index d = 2 + trial % 6;
        const Eigen::MatrixXd W = tailica::testing::gaussian_matrix(d, d, rng) + 3.0 * Eigen::MatrixXd::Identity(d, d);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W * W.transpose());
        const Eigen::MatrixXd ref =
            eig.eigenvectors() * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose() * W;
        const Eigen::MatrixXd got = symmetric_orthogonalize(W);
        EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT(orthonormality(got), 1e-14);
    }
    const Eigen::MatrixXd Q = random_orthogonal(5, 3);
    EXPECT_LT((symmetric_orthogonalize(Q) - Q).cwiseAbs().maxCoeff(), 1e-14);
    Eigen::Matrix2d singular;
    singular << 1, 2, 2, 4;
    EXPECT_THROW(symmetric_orthogonalize(singular), NumericalError);
}

TEST(FitIca, QuadraticContrastKeepsTheStart) {
    std::mt19937_64 rng(2);
    const SamplePanel y = exactly_white(2000, 4, rng);
    const Eigen::MatrixXd start = random_orthogonal(4, 11);
    IcaOptions options;
    options.initial = start;
    const UnmixingMatrix W = fit_ica(y, ContrastSpec(1), 11, options);
    EXPECT_TRUE(W.converged);
    EXPECT_LE(W.iterations, 2);
    EXPECT_LT((W.W - canonical_signs(start)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitIca, RecoversRotatedLaplaceSources) {
    std::mt19937_64 rng(3);
    const Mixture mix = mix_and_whiten(unit_laplace(100000, 2, rng), rotation(std::numbers::pi / 6.0));
    const UnmixingMatrix W = fit_ica(mix.white, ContrastSpec(2), 1);
    EXPECT_TRUE(W.converged);
    EXPECT_LT(amari_index(W.W, mix.mixing), 0.1);
    EXPECT_LT(W.worst_orthonormality, 1e-8);
    EXPECT_EQ(W.k, 2);
    EXPECT_EQ(W.seed, 1u);
}

TEST(FitIca, RecoversFourStudentTSources) {
    std::mt19937_64 rng(4);
    const Mixture mix = mix_and_whiten(unit_student(200000, 4, 5.0, rng), random_orthogonal(4, 77));
    const UnmixingMatrix W = fit_ica(mix.white, ContrastSpec(2), 3);
    EXPECT_TRUE(W.converged);
    EXPECT_LT(amari_index(W.W, mix.mixing), 0.15);
    EXPECT_LT(orthonormality(W.W), 1e-8);
}

TEST(FitIca, SeedDeterminismAndSignConvention) {
    std::mt19937_64 rng(5);
    const Mixture mix = mix_and_whiten(unit_laplace(20000, 3, rng), random_orthogonal(3, 8));
    const UnmixingMatrix a = fit_ica(mix.white, ContrastSpec(3), 42);
    const UnmixingMatrix b = fit_ica(mix.white, ContrastSpec(3), 42);
    EXPECT_EQ(a.W, b.W);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(a.W, canonical_signs(a.W));
    for (Eigen::Index j = 0; j < a.W.cols(); ++j) {
        Eigen::Index pivot = 0;
        a.W.col(j).cwiseAbs().maxCoeff(&pivot);
        EXPECT_GT(a.W(pivot, j), 0.0);
    }
}

TEST(FitIca, FixedPointIsStationary) {
    std::mt19937_64 rng(6);
    const Mixture mix = mix_and_whiten(unit_laplace(50000, 3, rng), random_orthogonal(3, 9));
    IcaOptions options;
    options.tol = 1e-8;
    const UnmixingMatrix W = fit_ica(mix.white, ContrastSpec(2), 5, options);
    ASSERT_TRUE(W.converged);
    options.initial = W.W;
    options.max_iter = 1;
    const UnmixingMatrix again = fit_ica(mix.white, ContrastSpec(2), 5, options);
    const Eigen::VectorXd overlap = (again.W.transpose() * W.W).diagonal().cwiseAbs();
    EXPECT_LT(1.0 - overlap.minCoeff(), 10 * options.tol);
}

TEST(FitIca, NonConvergenceReturnsLastIterate) {
    std::mt19937_64 rng(7);
    const Mixture mix = mix_and_whiten(unit_laplace(5000, 3, rng), random_orthogonal(3, 10));
    IcaOptions options;
    options.max_iter = 1;
    options.tol = 1e-15;
    const UnmixingMatrix W = fit_ica(mix.white, ContrastSpec(2), 5, options);
    EXPECT_FALSE(W.converged);
    EXPECT_EQ(W.iterations, 1);
    EXPECT_LT(orthonormality(W.W), 1e-8);
}

TEST(FitIca, RejectsBadInput) {
    std::mt19937_64 rng(8);
    const SamplePanel raw = make_panel(tailica::testing::gaussian_matrix(500, 3, rng) * 2.0);
    EXPECT_THROW(fit_ica(raw, ContrastSpec(2), 1), DataError);
    const SamplePanel y = exactly_white(500, 3, rng);
    IcaOptions bad_tol;
    bad_tol.tol = 0.0;
    EXPECT_THROW(fit_ica(y, ContrastSpec(2), 1, bad_tol), std::invalid_argument);
    IcaOptions bad_iter;
    bad_iter.max_iter = 0;
    EXPECT_THROW(fit_ica(y, ContrastSpec(2), 1, bad_iter), std::invalid_argument);
    IcaOptions bad_shape;
    bad_shape.initial = Eigen::MatrixXd::Identity(2, 2);
    EXPECT_THROW(fit_ica(y, ContrastSpec(2), 1, bad_shape), std::invalid_argument);
}

TEST(Transform, IdentityOrthogonalAndIds) {
    std::mt19937_64 rng(9);
    const SamplePanel y = exactly_white(1000, 3, rng);
    const UnmixingMatrix I{Eigen::MatrixXd::Identity(3, 3), 2, 0, 0, true, 0.0};
    const SamplePanel same = transform(I, y);
    EXPECT_EQ(same.data(), y.data());
    EXPECT_EQ(same.column_ids(), (std::vector<std::string>{"ic_0001", "ic_0002", "ic_0003"}));
    const UnmixingMatrix Q{random_orthogonal(3, 4), 2, 0, 0, true, 0.0};
    const Eigen::MatrixXd cov = tailica::testing::brute_covariance(transform(Q, y).data());
    EXPECT_LT((cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
    const UnmixingMatrix wrong{Eigen::MatrixXd::Identity(2, 2), 2, 0, 0, true, 0.0};
    EXPECT_THROW(transform(wrong, y), DataError);
}

TEST(KktResidual, ReproducesPipelineTailCovariance) {
    std::mt19937_64 rng(10);
    const Mixture mix = mix_and_whiten(unit_laplace(20000, 3, rng), random_orthogonal(3, 12));
    const UnmixingMatrix W = fit_ica(mix.white, ContrastSpec(2), 2);
    const Eigen::MatrixXd T = tail_covariance(transform(W, mix.white), 2).values;
    const KktResidual r = kkt_residual(mix.white, W.W, 2);
    EXPECT_EQ(r.off_diagonal_max, off_diagonal_summary(T).max_abs);
    EXPECT_EQ(r.diagonal_max, T.diagonal().maxCoeff());
    EXPECT_EQ(r.orthonormality_max, orthonormality(W.W));
    EXPECT_GE(r.tail_correlation_max, 0.0);
    EXPECT_LE(r.tail_correlation_max, 1.0);
    EXPECT_THROW(kkt_residual(mix.white, Eigen::MatrixXd::Identity(2, 2), 2), DataError);
}

TEST(KktResidual, ConvergedFitIsSymmetricAndBeatsRandomRotations) {
    std::mt19937_64 rng(11);
    const Mixture mix = mix_and_whiten(unit_laplace(50000, 4, rng), random_orthogonal(4, 13));
    IcaOptions options;
    options.tol = 1e-10;
    const UnmixingMatrix W = fit_ica(mix.white, ContrastSpec(2), 4, options);
    ASSERT_TRUE(W.converged);
    const KktResidual fitted = kkt_residual(mix.white, W.W, 2);
    // At a fixed point the multiplier is symmetric, so T - T^T vanishes.
    EXPECT_LT(fitted.asymmetry_max, 1e-4 * fitted.diagonal_max);
    EXPECT_LT(fitted.orthonormality_max, 1e-8);
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const KktResidual random = kkt_residual(mix.white, random_orthogonal(4, seed), 2);
        EXPECT_GT(random.off_diagonal_max, fitted.off_diagonal_max) << "seed " << seed;
        EXPECT_GT(random.tail_correlation_max, fitted.tail_correlation_max) << "seed " << seed;
    }
}

TEST(KktResidual, InvariantUnderRelabelingAndSignFlips) {
    std::mt19937_64 rng(12);
    const Mixture mix = mix_and_whiten(unit_student(5000, 4, 5.0, rng), random_orthogonal(4, 14));
    const Eigen::MatrixXd W = random_orthogonal(4, 15);
    const KktResidual base = kkt_residual(mix.white, W, 3);
    Eigen::MatrixXd flipped = W;
    flipped.col(1) *= -1.0;
    flipped.col(3) *= -1.0;
    const KktResidual f = kkt_residual(mix.white, flipped, 3);
    EXPECT_EQ(f.off_diagonal_max, base.off_diagonal_max);
    EXPECT_EQ(f.asymmetry_max, base.asymmetry_max);
    EXPECT_EQ(f.tail_correlation_max, base.tail_correlation_max);

    Eigen::MatrixXd permuted(4, 4);
    permuted << W.col(2), W.col(0), W.col(3), W.col(1);
    const KktResidual p = kkt_residual(mix.white, permuted, 3);
    EXPECT_DOUBLE_EQ(p.off_diagonal_max, base.off_diagonal_max);
    EXPECT_DOUBLE_EQ(p.asymmetry_max, base.asymmetry_max);
    EXPECT_DOUBLE_EQ(p.diagonal_max, base.diagonal_max);
    EXPECT_DOUBLE_EQ(p.tail_correlation_max, base.tail_correlation_max);
}

TEST(KktResidual, IdentityOnIndependentSourcesIsWithinSamplingError) {
    std::mt19937_64 rng(13);
    // Cholesky whitening is close to the identity map, so the columns stay
    // near the independent sources (PCA would rotate them arbitrarily).
    const Eigen::MatrixXd s = unit_laplace(100000, 3, rng);
    const Eigen::MatrixXd c = s.rowwise() - s.colwise().mean();
    const Eigen::MatrixXd L = tailica::testing::brute_covariance(s).llt().matrixL();
    Eigen::MatrixXd white = L.triangularView<Eigen::Lower>().solve(c.transpose()).transpose();
    white = white.rowwise() - white.colwise().mean();
    const Mixture mix{make_panel(white), Eigen::MatrixXd::Identity(3, 3)};
    const KktResidual r = kkt_residual(mix.white, Eigen::MatrixXd::Identity(3, 3), 2);
    const Eigen::MatrixXd se = tail_covariance_bootstrap_se(mix.white, 2, 200, 5);
    const Eigen::MatrixXd T = tail_covariance(mix.white, 2).values;
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j)
            if (i != j) EXPECT_LT(std::abs(T(i, j)), 5.0 * se(i, j)) << i << "," << j;
    EXPECT_EQ(r.off_diagonal_max, off_diagonal_summary(T).max_abs);
}

TEST(UnmixingFile, RoundTripsExactly) {
    std::mt19937_64 rng(14);
    const Mixture mix = mix_and_whiten(unit_laplace(5000, 3, rng), random_orthogonal(3, 16));
    const UnmixingMatrix W = fit_ica(mix.white, ContrastSpec(2), 9);
    std::stringstream text;
    write_unmixing(W, text);
    EXPECT_EQ(text.str().rfind("tailica-W v1, k=2, seed=9, converged=true, iterations=", 0), 0u) << text.str();
    const UnmixingMatrix back = read_unmixing(text);
    EXPECT_EQ(back.W, W.W);
    EXPECT_EQ(back.k, W.k);
    EXPECT_EQ(back.seed, W.seed);
    EXPECT_EQ(back.converged, W.converged);
    EXPECT_EQ(back.iterations, W.iterations);

    tailica::testing::TempDir dir("ica");
    write_unmixing(W, dir.file("W.csv"));
    EXPECT_EQ(read_unmixing(dir.file("W.csv")).W, W.W);
    std::istringstream bad("not a header\n");
    EXPECT_THROW(read_unmixing(bad), DataError);
}
