#pragma once

#include "tailica/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace tailica {

/// Moment contrast of order k: G(u) = u^{2k} / 2k, g = G', g' = G''.
class ContrastSpec {
public:
    explicit ContrastSpec(int k);

    int k() const noexcept { return k_; }
    double G(double u) const;
    double g(double u) const;
    double g_prime(double u) const;

private:
    int k_;
};

/// Orthonormal unmixing W (d x d); component i is w_i^T y.
struct UnmixingMatrix {
    Eigen::MatrixXd W;
    int k = 1;
    std::uint64_t seed = 0;
    int iterations = 0;
    bool converged = false;
    /// Largest max |W^T W - I| seen over all iterates.
    double worst_orthonormality = 0.0;
};

struct IcaOptions {
    double tol = 1e-8;
    int max_iter = 1000;
    /// Starting point; a seeded random orthogonal matrix when unset.
    std::optional<Eigen::MatrixXd> initial;
};

/// Random orthogonal d x d matrix: QR of a seeded Gaussian draw.
Eigen::MatrixXd random_orthogonal(Eigen::Index d, std::uint64_t seed);

/// W <- (W W^T)^{-1/2} W. Throws NumericalError when W W^T is near singular.
Eigen::MatrixXd symmetric_orthogonalize(const Eigen::MatrixXd& W);

/// Symmetric fixed-point iteration for max E G(w_i^T y) subject to W^T W = I.
///
/// Each sweep replaces every column by E[y g(w_i^T y)] - E[g'(w_i^T y)] w_i and
/// then orthogonalizes all columns together. Stops once
/// 1 - min_i |<w_i new, w_i old>| < tol; otherwise returns the last iterate with
/// converged = false after max_iter sweeps. The returned columns have their
/// largest-magnitude coordinate positive.
UnmixingMatrix fit_ica(const SamplePanel& white_panel, const ContrastSpec& contrast, std::uint64_t seed,
                       const IcaOptions& options = {});

/// Components W^T y as a panel with ids `ic_0001`, ...
SamplePanel transform(const UnmixingMatrix& W, const SamplePanel& white_panel);

struct KktResidual {
    double off_diagonal_max = 0.0;   ///< max_{i != j} |T^(k)_ij| of the components
    double orthonormality_max = 0.0; ///< max |W^T W - I|
    /// max_{i != j} |T_ij - T_ji|: vanishes at a fixed point of the symmetric iteration.
    double asymmetry_max = 0.0;
    double diagonal_max = 0.0;       ///< max_i T^(k)_ii, the natural scale of the entries
    /// max_{i != j} |T_ij| / (T_ii^{1/2k} T_jj^{(2k-1)/2k}); Hoelder bounds it by 1,
    /// so it compares fits whose moments differ in scale.
    double tail_correlation_max = 0.0;
};

KktResidual kkt_residual(const SamplePanel& white_panel, const Eigen::MatrixXd& W, int k);

/// Amari error of P = W_est^T A_true scaled to [0, 1]; zero exactly when P is
/// a scaled, signed permutation.
double amari_index(const Eigen::MatrixXd& W_est, const Eigen::MatrixXd& A_true);

/// Flips columns so the largest-magnitude coordinate of each is positive.
Eigen::MatrixXd canonical_signs(Eigen::MatrixXd W);

/// Text format: `tailica-W v1, k=<k>, seed=<seed>, converged=<bool>, iterations=<count>`
/// followed by the matrix as CSV.
void write_unmixing(const UnmixingMatrix& W, std::ostream& out);
void write_unmixing(const UnmixingMatrix& W, const std::filesystem::path& path);
UnmixingMatrix read_unmixing(std::istream& in);
UnmixingMatrix read_unmixing(const std::filesystem::path& path);

}  // namespace tailica
