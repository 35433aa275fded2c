#pragma once

#include "tailica/panel.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tailica {

/// PCA whitening y = projection * (x - mean), keeping the d leading
/// eigendirections of the (1/m) covariance. Rows of `projection` are
/// eigenvectors scaled by 1/sqrt(eigenvalue), each with its largest-magnitude
/// coordinate positive.
struct WhiteningTransform {
    Eigen::VectorXd mean;
    Eigen::MatrixXd projection;  ///< d x n
    Eigen::VectorXd eigenvalues; ///< d, strictly positive, descending
    std::vector<std::string> column_ids;  ///< training panel columns, in order
    bool standardized = false;
    /// d asked for at fit time; larger than d() when the eigenvalue floor cut directions.
    Eigen::Index requested_d = 0;

    Eigen::Index d() const noexcept { return projection.rows(); }
    bool reduced() const noexcept { return requested_d > d(); }
};

struct WhiteningOptions {
    double eig_floor = 1e-10;  ///< relative to the largest eigenvalue
    /// Divide each asset by its standard deviation before PCA (folded into `projection`).
    bool standardize = false;
};

WhiteningTransform fit_whitening(const SamplePanel& panel, Eigen::Index d, const WhiteningOptions& options = {});

/// d-column panel (x - mean) * projection^T with column ids `pc_0001`, ...
SamplePanel apply_whitening(const WhiteningTransform& transform, const SamplePanel& panel);

/// `tailica-whiten v1` text format; values round-trip exactly.
void write_whitening(const WhiteningTransform& transform, std::ostream& out);
void write_whitening(const WhiteningTransform& transform, const std::filesystem::path& path);
WhiteningTransform read_whitening(std::istream& in);
WhiteningTransform read_whitening(const std::filesystem::path& path);

/// (1/m) X^T X of an already-centered matrix.
Eigen::MatrixXd second_moment_matrix(const Eigen::MatrixXd& centered);

/// Component ids `<prefix>_0001`, `<prefix>_0002`, ...
std::vector<std::string> numbered_ids(const std::string& prefix, Eigen::Index count);

}  // namespace tailica
