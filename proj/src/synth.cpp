#include "tailica/eval.hpp"

#include "tailica/error.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace tailica {

namespace {

// Student-t scaled to unit variance (nu > 2).
double unit_t(std::mt19937_64& rng, double nu) {
    std::student_t_distribution<double> t(nu);
    return t(rng) * std::sqrt((nu - 2.0) / nu);
}

}  // namespace

void validate(const SyntheticMarketSpec& spec) {
    const auto fail = [](const std::string& what) { throw std::invalid_argument("synthetic market: " + what); };
    if (spec.n_assets < 1) fail("n_assets must be >= 1");
    if (spec.m_samples < 2) fail("m_samples must be >= 2");
    if (!spec.gaussian) {
        if (!(spec.nu_min > 2.0) || !(spec.factor_nu > 2.0)) fail("tail exponents must exceed 2");
        if (spec.nu_max < spec.nu_min) fail("nu_max < nu_min");
    }
    if (!(spec.loading_min >= 0.0) || spec.loading_max > 1.0 || spec.loading_max < spec.loading_min)
        fail("loadings must satisfy 0 <= loading_min <= loading_max <= 1");
    if (!(spec.vol_min > 0.0) || spec.vol_max < spec.vol_min) fail("volatilities must be positive and ordered");
    if (!(spec.crash_probability >= 0.0 && spec.crash_probability <= 1.0)) fail("crash_probability outside [0, 1]");
    if (!(spec.crash_start_fraction >= 0.0 && spec.crash_start_fraction <= 1.0))
        fail("crash_start_fraction outside [0, 1]");
    if (!(spec.crash_magnitude >= 0.0)) fail("crash_magnitude must be >= 0");
}

SamplePanel generate_market(const SyntheticMarketSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> exponential(1.0);

    const Eigen::Index n = spec.n_assets;
    const Eigen::Index m = spec.m_samples;
    Eigen::VectorXd beta(n), vol(n), nu(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        beta(a) = spec.loading_min + (spec.loading_max - spec.loading_min) * unit(rng);
        vol(a) = spec.vol_min + (spec.vol_max - spec.vol_min) * unit(rng);
        nu(a) = spec.nu_min + (spec.nu_max - spec.nu_min) * unit(rng);
    }
    const Eigen::VectorXd idio = (1.0 - beta.array().square()).sqrt();
    const auto crash_start = static_cast<Eigen::Index>(std::floor(spec.crash_start_fraction * static_cast<double>(m)));

    Eigen::MatrixXd data(m, n);
    for (Eigen::Index t = 0; t < m; ++t) {
        const double f = spec.gaussian ? normal(rng) : unit_t(rng, spec.factor_nu);
        double crash = 0.0;
        if (!spec.gaussian && t >= crash_start && unit(rng) < spec.crash_probability)
            crash = -spec.crash_magnitude * (1.0 + exponential(rng));
        for (Eigen::Index a = 0; a < n; ++a) {
            const double e = spec.gaussian ? normal(rng) : unit_t(rng, nu(a));
            data(t, a) = vol(a) * (beta(a) * (f + crash) + idio(a) * e);
        }
    }
    std::vector<std::string> ids;
    for (Eigen::Index a = 1; a <= n; ++a) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "S%04ld", static_cast<long>(a));
        ids.emplace_back(buf);
    }
    return SamplePanel(std::move(data), std::move(ids), weekday_dates(spec.start_date, static_cast<std::size_t>(m)));
}

}  // namespace tailica
