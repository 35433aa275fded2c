#include "tailica/entropy.hpp"

#include "tailica/error.hpp"
#include "tailica/moments.hpp"
#include "tailica/tailcov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace tailica {

namespace {

struct OrderStatistics {
    std::vector<double> x;
    std::size_t ties_perturbed = 0;
};

OrderStatistics sorted_copy(std::span<const double> sample, std::size_t n) {
    const std::size_t m = sample.size();
    if (n < 1) throw std::invalid_argument("entropy window must be >= 1");
    if (m < 2 * n + 1)
        throw DataError("entropy window " + std::to_string(n) + " needs at least " + std::to_string(2 * n + 1) +
                        " samples, got " + std::to_string(m));
    OrderStatistics out{std::vector<double>(sample.begin(), sample.end()), 0};
    for (double v : out.x)
        if (!std::isfinite(v)) throw DataError("entropy of a sample with non-finite entries");
    std::sort(out.x.begin(), out.x.end());
    if (out.x.front() == out.x.back()) throw DataError("zero spacings: constant sample");
    for (std::size_t j = 1; j < m; ++j) {
        if (out.x[j] <= out.x[j - 1]) {
            out.x[j] = std::nextafter(out.x[j - 1], std::numeric_limits<double>::infinity());
            ++out.ties_perturbed;
        }
    }
    return out;
}

// 0-based clamped order statistic.
double at(const std::vector<double>& x, std::ptrdiff_t j) {
    const auto last = static_cast<std::ptrdiff_t>(x.size()) - 1;
    return x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last))];
}

}  // namespace

std::string_view to_string(EntropyMethod method) {
    switch (method) {
        case EntropyMethod::vasicek: return "vasicek";
        case EntropyMethod::ebrahimi: return "ebrahimi";
        case EntropyMethod::correa: return "correa";
    }
    return "unknown";
}

EntropyMethod parse_entropy_method(std::string_view name) {
    if (name == "vasicek") return EntropyMethod::vasicek;
    if (name == "ebrahimi") return EntropyMethod::ebrahimi;
    if (name == "correa") return EntropyMethod::correa;
    throw std::invalid_argument("unknown entropy method '" + std::string(name) + "'");
}

std::size_t default_window(std::size_t m) {
    auto n = static_cast<std::size_t>(std::sqrt(static_cast<double>(m)));
    while (n * n > m) --n;
    while ((n + 1) * (n + 1) <= m) ++n;
    return std::max<std::size_t>(n, 1);
}

EntropyEstimate vasicek_entropy(std::span<const double> sample, std::size_t n) {
    const auto os = sorted_copy(sample, n);
    const std::size_t m = os.x.size();
    const double factor = static_cast<double>(m + 1) / (2.0 * static_cast<double>(n));
    const auto w = static_cast<std::ptrdiff_t>(n);
    double sum = 0.0;
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(m); ++j)
        sum += std::log(factor * (at(os.x, j + w) - at(os.x, j - w)));
    return {sum / static_cast<double>(m + 1), EntropyMethod::vasicek, n, m, os.ties_perturbed};
}

EntropyEstimate ebrahimi_entropy(std::span<const double> sample, std::size_t n) {
    const auto os = sorted_copy(sample, n);
    const std::size_t m = os.x.size();
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const auto w = static_cast<std::ptrdiff_t>(n);
    double sum = 0.0;
    for (std::size_t j1 = 1; j1 <= m; ++j1) {  // 1-based rank
        double c = 2.0;
        if (j1 <= n) c = 1.0 + static_cast<double>(j1 - 1) / nd;
        else if (j1 > m - n) c = 1.0 + static_cast<double>(m - j1) / nd;
        const auto j = static_cast<std::ptrdiff_t>(j1) - 1;
        sum += std::log(md * (at(os.x, j + w) - at(os.x, j - w)) / (c * nd));
    }
    return {sum / md, EntropyMethod::ebrahimi, n, m, os.ties_perturbed};
}

EntropyEstimate correa_entropy(std::span<const double> sample, std::size_t n) {
    const auto os = sorted_copy(sample, n);
    const std::size_t m = os.x.size();
    const double md = static_cast<double>(m);
    const auto w = static_cast<std::ptrdiff_t>(n);
    double sum = 0.0;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        double mean = 0.0;
        for (std::ptrdiff_t j = i - w; j <= i + w; ++j) mean += at(os.x, j);
        mean /= static_cast<double>(2 * w + 1);
        double num = 0.0;
        double den = 0.0;
        for (std::ptrdiff_t j = i - w; j <= i + w; ++j) {
            const double dev = at(os.x, j) - mean;
            num += dev * static_cast<double>(j - i);
            den += dev * dev;
        }
        if (den <= 0.0 || num <= 0.0) throw DataError("zero local variance in entropy window");
        sum += std::log(num / (md * den));
    }
    return {-sum / md, EntropyMethod::correa, n, m, os.ties_perturbed};
}

EntropyEstimate estimate_entropy(std::span<const double> sample, const EntropyEstimatorConfig& config) {
    const std::size_t n = config.window_n == 0 ? default_window(sample.size()) : config.window_n;
    switch (config.method) {
        case EntropyMethod::vasicek: return vasicek_entropy(sample, n);
        case EntropyMethod::ebrahimi: return ebrahimi_entropy(sample, n);
        case EntropyMethod::correa: return correa_entropy(sample, n);
    }
    throw std::invalid_argument("unknown entropy method");
}

double entropy_moment_approximation(std::span<const double> sample, int k, std::size_t n) {
    const std::size_t m = sample.size();
    if (n < 1) throw std::invalid_argument("entropy window must be >= 1");
    if (m < 2 * n + 1) throw DataError("entropy window too large for the sample");
    const double md = static_cast<double>(m);
    return log_moment(sample, k) / (2.0 * k) + std::log(md) / (2.0 * k) +
           std::log((md + 1.0) / (2.0 * static_cast<double>(n)));
}

double mutual_information_proxy(const SamplePanel& components, const EntropyEstimatorConfig& config) {
    require_centered(components, 1e-8);
    const auto& data = components.data();
    const double m = static_cast<double>(data.rows());
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        const double var = data.col(j).squaredNorm() / m;
        if (std::abs(var - 1.0) > 1e-6)
            throw DataError("column '" + components.column_ids()[static_cast<std::size_t>(j)] +
                            "' is not unit variance");
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < data.cols(); ++j) total += estimate_entropy(components.column(j), config).value;
    return total;
}

}  // namespace tailica
