#include "tailica/whiten.hpp"

#include "tailica/error.hpp"
#include "tailica/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace tailica {

namespace {

constexpr const char* kWhitenHeader = "tailica-whiten v1";

std::vector<double> parse_row(const std::vector<std::string>& fields, std::size_t skip, const char* what) {
    std::vector<double> out;
    for (std::size_t i = skip; i < fields.size(); ++i) {
        double v = 0.0;
        if (!io::parse_double(fields[i], v)) throw DataError(std::string("bad value in whitening ") + what);
        out.push_back(v);
    }
    return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::vector<std::string> numbered_ids(const std::string& prefix, Eigen::Index count) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 1; i <= count; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "_%04ld", static_cast<long>(i));
        ids.push_back(prefix + buf);
    }
    return ids;
}

Eigen::MatrixXd second_moment_matrix(const Eigen::MatrixXd& centered) {
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(centered.rows());
    return (cov + cov.transpose()) / 2.0;
}

WhiteningTransform fit_whitening(const SamplePanel& panel, Eigen::Index d, const WhiteningOptions& options) {
    const Eigen::Index n = panel.cols();
    if (d < 1 || d > n)
        throw std::invalid_argument("whitening dimension must be in [1, " + std::to_string(n) + "]");
    if (panel.rows() <= d) throw DataError("whitening needs more rows than retained components");
    if (!(options.eig_floor > 0.0)) throw std::invalid_argument("eigenvalue floor must be positive");

    WhiteningTransform out;
    out.mean = panel.data().colwise().mean().transpose();
    out.column_ids = panel.column_ids();
    out.standardized = options.standardize;
    out.requested_d = d;
    Eigen::MatrixXd centered = panel.data().rowwise() - out.mean.transpose();
    Eigen::VectorXd inv_sd = Eigen::VectorXd::Ones(n);
    if (options.standardize) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double sd = std::sqrt(centered.col(j).squaredNorm() / static_cast<double>(centered.rows()));
            if (sd > 0.0) inv_sd(j) = 1.0 / sd;
        }
        centered = centered * inv_sd.asDiagonal();
    }

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second_moment_matrix(centered));
    if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
    const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
    const double largest = values(n - 1);
    if (!(largest > 0.0)) throw NumericalError("all covariance eigenvalues are below the floor");
    Eigen::Index kept = 0;
    while (kept < d && values(n - 1 - kept) >= options.eig_floor * largest) ++kept;

    out.projection.resize(kept, n);
    out.eigenvalues.resize(kept);
    for (Eigen::Index r = 0; r < kept; ++r) {
        Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - r);
        Eigen::Index pivot = 0;
        v.cwiseAbs().maxCoeff(&pivot);
        if (v(pivot) < 0.0) v = -v;
        out.eigenvalues(r) = values(n - 1 - r);
        out.projection.row(r) = (v.cwiseProduct(inv_sd) / std::sqrt(out.eigenvalues(r))).transpose();
    }
    return out;
}

SamplePanel apply_whitening(const WhiteningTransform& transform, const SamplePanel& panel) {
    const auto& ids = panel.column_ids();
    if (ids.size() != transform.column_ids.size())
        throw DataError("panel has " + std::to_string(ids.size()) + " columns, whitening expects " +
                        std::to_string(transform.column_ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j) {
        if (ids[j] != transform.column_ids[j])
            throw DataError("column " + std::to_string(j) + " is '" + ids[j] + "', whitening expects '" +
                            transform.column_ids[j] + "'");
    }
    Eigen::MatrixXd centered = panel.data().rowwise() - transform.mean.transpose();
    return panel.with_data(centered * transform.projection.transpose(), numbered_ids("pc", transform.d()));
}

void write_whitening(const WhiteningTransform& transform, std::ostream& out) {
    const auto row = [&](const char* label, const auto& values) {
        out << label;
        for (Eigen::Index i = 0; i < values.size(); ++i) out << ',' << io::format_double(values(i));
        out << '\n';
    };
    out << kWhitenHeader << '\n';
    out << "columns";
    for (const auto& id : transform.column_ids) out << ',' << id;
    out << '\n';
    out << "standardized," << (transform.standardized ? 1 : 0) << '\n';
    out << "requested_d," << transform.requested_d << '\n';
    row("mean", transform.mean);
    row("eigenvalues", transform.eigenvalues);
    for (Eigen::Index r = 0; r < transform.projection.rows(); ++r)
        row("projection", Eigen::VectorXd(transform.projection.row(r).transpose()));
}

void write_whitening(const WhiteningTransform& transform, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_whitening(transform, out);
}

WhiteningTransform read_whitening(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || io::trim(line) != kWhitenHeader)
        throw DataError(std::string("missing '") + kWhitenHeader + "' header");
    WhiteningTransform out;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (io::trim(line).empty()) continue;
        const auto fields = io::split_csv_line(line);
        const auto& key = fields.front();
        if (key == "columns") {
            out.column_ids.assign(fields.begin() + 1, fields.end());
        } else if (key == "standardized") {
            out.standardized = fields.size() > 1 && fields[1] == "1";
        } else if (key == "requested_d") {
            out.requested_d = fields.size() > 1 ? std::stol(fields[1]) : 0;
        } else if (key == "mean") {
            out.mean = to_vector(parse_row(fields, 1, "mean"));
        } else if (key == "eigenvalues") {
            out.eigenvalues = to_vector(parse_row(fields, 1, "eigenvalues"));
        } else if (key == "projection") {
            rows.push_back(parse_row(fields, 1, "projection"));
        } else {
            throw DataError("unknown whitening record '" + key + "'");
        }
    }
    const auto n = static_cast<Eigen::Index>(out.column_ids.size());
    if (n == 0 || out.mean.size() != n || rows.empty() ||
        out.eigenvalues.size() != static_cast<Eigen::Index>(rows.size()))
        throw DataError("inconsistent whitening file");
    out.projection.resize(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != n) throw DataError("projection row has wrong width");
        out.projection.row(static_cast<Eigen::Index>(r)) = to_vector(rows[r]).transpose();
    }
    if (out.requested_d == 0) out.requested_d = out.projection.rows();
    return out;
}

WhiteningTransform read_whitening(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    return read_whitening(in);
}

}  // namespace tailica
