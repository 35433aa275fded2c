#include "tailica/moments.hpp"

#include "tailica/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tailica {

namespace {

void require_nonempty(std::span<const double> sample) {
    if (sample.empty()) throw DataError("empty sample");
}

double max_abs(std::span<const double> sample) {
    double best = 0.0;
    for (double x : sample) best = std::max(best, std::abs(x));
    return best;
}

}  // namespace

MomentOrder::MomentOrder(int p) : p_(p) {
    if (p < 1) throw std::invalid_argument("moment order must be >= 1, got " + std::to_string(p));
}

double binary_scale(double x) {
    x = std::abs(x);
    if (x == 0.0) return 0.0;
    int exponent = 0;
    const double mantissa = std::frexp(x, &exponent);  // x = mantissa * 2^exponent, mantissa in [0.5, 1)
    return mantissa == 0.5 ? x : std::ldexp(1.0, exponent);
}

SampleExtremes extremes(std::span<const double> sample) {
    require_nonempty(sample);
    const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
    return SampleExtremes{*hi, *lo, std::max(*hi, -*lo)};
}

double cross_moment(std::span<const double> a, std::span<const double> b, int q) {
    require_nonempty(a);
    if (a.size() != b.size()) throw DataError("cross moment of samples with different lengths");
    if (q < 0) throw std::invalid_argument("cross moment power must be >= 0");
    const double sa = binary_scale(max_abs(a));
    const double sb = binary_scale(max_abs(b));
    if (sa == 0.0 || (sb == 0.0 && q > 0)) return 0.0;
    const double ib = q > 0 ? 1.0 / sb : 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] / sa) * std::pow(b[i] * ib, q);
    const double scale = sa * (q > 0 ? std::pow(sb, q) : 1.0);
    return (scale * sum) / static_cast<double>(a.size());
}

double moment(std::span<const double> sample, MomentOrder p) {
    return cross_moment(sample, sample, p.value() - 1);
}

RootMoment root_moment(std::span<const double> sample, MomentOrder p) {
    require_nonempty(sample);
    const int order = p.value();
    if (!p.is_even()) {
        const auto ext = extremes(sample);
        if (ext.x_max + ext.x_min == 0.0) {
            return RootMoment{root_moment(sample, MomentOrder(order + 1)).value, true};
        }
    }
    // Normalized form keeps the root finite where M_p itself would overflow.
    const double s = binary_scale(max_abs(sample));
    if (s == 0.0) return {};
    double sum = 0.0;
    for (double x : sample) {
        const double r = x / s;
        sum += r * std::pow(r, order - 1);
    }
    const double mean = sum / static_cast<double>(sample.size());
    const double root = s * std::pow(std::abs(mean), 1.0 / order);
    return RootMoment{mean < 0.0 ? -root : root, false};
}

double log_moment(std::span<const double> sample, int k) {
    require_nonempty(sample);
    if (k < 1) throw std::invalid_argument("log moment order k must be >= 1");
    const double x_inf = max_abs(sample);
    if (x_inf == 0.0) throw DataError("log moment undefined for an all-zero sample");
    double sum = 0.0;
    for (double x : sample) sum += std::pow(x / x_inf, 2 * k);
    return -std::log(static_cast<double>(sample.size())) + 2.0 * k * std::log(x_inf) + std::log(sum);
}

std::vector<double> filter_weights(std::span<const double> sample, MomentOrder p) {
    require_nonempty(sample);
    const double x_inf = max_abs(sample);
    std::vector<double> weights(sample.size(), 0.0);
    if (x_inf == 0.0) return weights;
    for (std::size_t i = 0; i < sample.size(); ++i) weights[i] = std::pow(sample[i] / x_inf, p.value());
    return weights;
}

double excess_kurtosis(std::span<const double> sample) {
    const double m2 = moment(sample, MomentOrder(2));
    if (m2 == 0.0) return 0.0;
    return moment(sample, MomentOrder(4)) / (m2 * m2) - 3.0;
}

}  // namespace tailica
