#include "tailica/tailcov.hpp"

#include "tailica/error.hpp"
#include "tailica/io.hpp"
#include "tailica/moments.hpp"
#include "tailica/parallel.hpp"

#include <cmath>
#include <ostream>
#include <random>

namespace tailica {

void require_centered(const SamplePanel& panel, double tol) {
    const auto& data = panel.data();
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        const double mean = data.col(j).mean();
        const double scale = data.col(j).cwiseAbs().maxCoeff();
        if (std::abs(mean) > tol * scale)
            throw DataError("column '" + panel.column_ids()[static_cast<std::size_t>(j)] +
                            "' is not centered (mean " + io::format_double(mean) + ")");
    }
}

TailCovarianceMatrix tail_covariance(const SamplePanel& components, int k, bool check_centered) {
    if (k < 1) throw std::invalid_argument("tail covariance order k must be >= 1");
    if (check_centered) require_centered(components);
    const Eigen::Index d = components.cols();
    TailCovarianceMatrix out{k, Eigen::MatrixXd(d, d), components.column_ids()};
    // Each entry is its own fixed-order sum, so the parallel split never changes the result.
    parallel_for(static_cast<std::size_t>(d * d), [&](std::size_t idx) {
        const auto i = static_cast<Eigen::Index>(idx) / d;
        const auto j = static_cast<Eigen::Index>(idx) % d;
        out.values(i, j) = cross_moment(components.column(i), components.column(j), 2 * k - 1);
    });
    return out;
}

OverlapMatrix max_overlap_covariance(const SamplePanel& components, bool check_centered) {
    if (check_centered) require_centered(components);
    const auto& s = components.data();
    const Eigen::Index d = s.cols();
    OverlapMatrix out{Eigen::MatrixXd(d, d), components.column_ids(), std::vector<bool>(static_cast<std::size_t>(d))};
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::Index t_star = 0;
        const double peak = s.col(j).cwiseAbs().maxCoeff(&t_star);
        std::size_t hits = 0;
        for (Eigen::Index t = 0; t < s.rows(); ++t) hits += std::abs(s(t, j)) == peak;
        out.tied_column[static_cast<std::size_t>(j)] = hits > 1;
        for (Eigen::Index i = 0; i < d; ++i) out.values(i, j) = s(t_star, i) * s(t_star, j);
    }
    return out;
}

OffDiagonalSummary off_diagonal_summary(const Eigen::MatrixXd& matrix) {
    OffDiagonalSummary out;
    double sq = 0.0;
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
            if (i == j) continue;
            out.max_abs = std::max(out.max_abs, std::abs(matrix(i, j)));
            sq += matrix(i, j) * matrix(i, j);
        }
    }
    out.frobenius = std::sqrt(sq);
    return out;
}

Eigen::MatrixXd tail_covariance_bootstrap_se(const SamplePanel& components, int k, int resamples,
                                             std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("tail covariance order k must be >= 1");
    if (resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
    const auto& s = components.data();
    const Eigen::Index m = s.rows();
    const Eigen::Index d = s.cols();
    // Powers are precomputed once; each resample only re-weights rows.
    Eigen::ArrayXXd tails = s.array().pow(2 * k - 1);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, m - 1);
    Eigen::VectorXd counts(m);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(d, d);
    for (int r = 0; r < resamples; ++r) {
        counts.setZero();
        for (Eigen::Index t = 0; t < m; ++t) counts(pick(rng)) += 1.0;
        const Eigen::MatrixXd weighted = s.array().colwise() * counts.array();
        const Eigen::MatrixXd est = weighted.transpose() * tails.matrix() / static_cast<double>(m);
        sum += est;
        sum_sq += est.cwiseProduct(est);
    }
    const double n = resamples;
    Eigen::MatrixXd var = (sum_sq - sum.cwiseProduct(sum) / n) / (n - 1.0);
    return var.cwiseMax(0.0).cwiseSqrt();
}

void write_matrix_csv(const Eigen::MatrixXd& values, const std::vector<std::string>& ids,
                      std::ostream& out) {
    out << "id";
    for (const auto& id : ids) out << ',' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        out << ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << io::format_double(values(i, j));
        out << '\n';
    }
}

}  // namespace tailica
