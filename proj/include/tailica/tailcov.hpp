#pragma once

#include "tailica/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tailica {

/// Order-k tail covariance of component series s_1..s_d:
///   values(i, j) = (1/m) sum_t s_i(t) s_j(t)^{2k-1}.
/// Equals the covariance matrix for k = 1; not symmetric in general for k > 1.
struct TailCovarianceMatrix {
    int order_k = 1;
    Eigen::MatrixXd values;
    std::vector<std::string> ids;
};

/// Throws DataError for uncentered columns unless `check_centered` is false;
/// the entries are plain product moments either way.
TailCovarianceMatrix tail_covariance(const SamplePanel& components, int k, bool check_centered = true);

/// k -> infinity limit of T^(k)(i, j) / x_inf(j)^{2k-2}: the value of s_i on the
/// date of the largest |s_j|, times s_j there.
struct OverlapMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> ids;
    /// Columns j whose max |s_j| is attained at more than one date; their
    /// entries use the first such date.
    std::vector<bool> tied_column;
};

OverlapMatrix max_overlap_covariance(const SamplePanel& components, bool check_centered = true);

struct OffDiagonalSummary {
    double max_abs = 0.0;
    double frobenius = 0.0;
};

OffDiagonalSummary off_diagonal_summary(const Eigen::MatrixXd& matrix);

/// Bootstrap standard error of every entry of T^(k): rows are resampled with
/// replacement `resamples` times and the entry-wise standard deviation of the
/// resampled (1/m) sum s_i s_j^{2k-1} is returned.
Eigen::MatrixXd tail_covariance_bootstrap_se(const SamplePanel& components, int k, int resamples,
                                             std::uint64_t seed);

/// CSV with a header row and a leading column of component ids.
void write_matrix_csv(const Eigen::MatrixXd& values, const std::vector<std::string>& ids,
                      std::ostream& out);

/// Throws DataError unless every column mean is below tol times the column's max |x|.
void require_centered(const SamplePanel& panel, double tol = 1e-8);

}  // namespace tailica
