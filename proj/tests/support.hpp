#pragma once

#include "tailica/panel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace tailica::testing {

inline std::vector<std::string> ids(Eigen::Index n, const std::string& prefix = "c") {
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < n; ++j) out.push_back(prefix + std::to_string(j));
    return out;
}

inline SamplePanel make_panel(const Eigen::MatrixXd& data) {
    return SamplePanel(data, ids(data.cols()), weekday_dates("2000-01-03", static_cast<std::size_t>(data.rows())));
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Eigen::MatrixXd out(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i) out(i, j) = dist(rng);
    return out;
}

inline std::vector<double> gaussian(std::size_t m, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    std::vector<double> out(m);
    for (auto& v : out) v = dist(rng);
    return out;
}

inline std::vector<double> uniform(std::size_t m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> out(m);
    for (auto& v : out) v = dist(rng);
    return out;
}

/// Laplace with scale b: density exp(-|x|/b) / 2b, variance 2b^2.
inline std::vector<double> laplace(std::size_t m, double b, std::mt19937_64& rng) {
    std::exponential_distribution<double> expo(1.0);
    std::bernoulli_distribution sign;
    std::vector<double> out(m);
    for (auto& v : out) v = (sign(rng) ? b : -b) * expo(rng);
    return out;
}

/// Student-t with nu degrees of freedom, rescaled to unit variance.
inline std::vector<double> student_t(std::size_t m, double nu, std::mt19937_64& rng) {
    std::student_t_distribution<double> dist(nu);
    const double scale = std::sqrt((nu - 2.0) / nu);
    std::vector<double> out(m);
    for (auto& v : out) v = scale * dist(rng);
    return out;
}

inline Eigen::MatrixXd columns(const std::vector<std::vector<double>>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(cols.front().size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < cols[j].size(); ++i)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
    return out;
}

/// (1/m) X_c^T X_c with plain two-pass centering.
inline Eigen::MatrixXd brute_covariance(const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    return (c.transpose() * c) / static_cast<double>(x.rows());
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("tailica_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& text) const {
        const auto p = file(name);
        std::ofstream(p, std::ios::binary) << text;
        return p;
    }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace tailica::testing
