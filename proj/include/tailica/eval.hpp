#pragma once

#include "tailica/entropy.hpp"
#include "tailica/ica.hpp"
#include "tailica/panel.hpp"
#include "tailica/whiten.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace tailica {

// ---------------------------------------------------------------------------
// Synthetic market

/// One-factor Student-t market: asset a returns
///   r_a(t) = vol_a * (beta_a f(t) + sqrt(1 - beta_a^2) e_a(t)) + crash_a(t),
/// with f and e_a unit-variance Student-t draws. From row
/// crash_start_fraction * m on, each day independently carries a market-wide
/// crash with probability crash_probability; the crash moves every asset by
/// -crash_magnitude * vol_a * beta_a * (1 + Exp(1)).
struct SyntheticMarketSpec {
    Eigen::Index n_assets = 50;
    Eigen::Index m_samples = 4000;
    double nu_min = 3.0;  ///< idiosyncratic tail exponents drawn uniformly in [nu_min, nu_max]
    double nu_max = 8.0;
    double factor_nu = 4.0;
    bool gaussian = false;  ///< normal draws everywhere and no crashes (the nu -> infinity limit)
    double loading_min = 0.3;
    double loading_max = 0.6;
    double vol_min = 1.0;  ///< daily volatility in percentage points
    double vol_max = 2.5;
    double crash_probability = 0.01;
    double crash_magnitude = 6.0;
    double crash_start_fraction = 0.5;
    std::string start_date = "2014-10-01";
    std::uint64_t seed = 7;
};

/// Throws std::invalid_argument for nu <= 2, probabilities outside [0, 1] and
/// other impossible settings.
void validate(const SyntheticMarketSpec& spec);

/// Deterministic in the seed. Columns `S0001`, ...; rows are weekdays from start_date.
SamplePanel generate_market(const SyntheticMarketSpec& spec);

// ---------------------------------------------------------------------------
// Reports

struct QuantileSet {
    double q001 = 0.0;  ///< 0.1%
    double q01 = 0.0;   ///< 1%
    double q99 = 0.0;
    double q999 = 0.0;
};

struct Histogram {
    std::vector<double> edges;  ///< counts.size() + 1 ascending edges
    std::vector<std::size_t> counts;
};

/// 101 bins symmetric about zero spanning [-A, A], A = max |x|: a linear core
/// of 41 bins over one root-mean-square either side of zero and 30
/// log-spaced bins in each tail. Falls back to 101 linear bins when the core
/// would cover everything.
Histogram tail_histogram(std::span<const double> values);

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile(std::vector<double> values, double prob);

struct ComponentTail {
    std::string id;
    QuantileSet quantiles;
    double root_moment = 0.0;  ///< M_{2k}^{1/2k}
    double excess_kurtosis = 0.0;
    double entropy = 0.0;
};

struct DistributionSummary {
    std::size_t count = 0;
    QuantileSet quantiles;
    double abs_q999 = 0.0;      ///< 99.9% quantile of |x|
    double central_mass = 0.0;  ///< fraction with |x| < 1
    double root_moment = 0.0;
    double excess_kurtosis = 0.0;
    Histogram histogram;
};

DistributionSummary summarize(std::span<const double> values, int k);

struct TailReport {
    int k = 1;
    std::string bucket;  ///< "in" or "out"
    std::vector<ComponentTail> components;
    DistributionSummary pooled;     ///< all components' returns together
    DistributionSummary portfolio;  ///< equal-weighted portfolio of the components
    double entropy_sum = 0.0;       ///< sum of component marginal entropies
};

TailReport tail_report(const SamplePanel& components, int k, const std::string& bucket,
                       const EntropyEstimatorConfig& entropy);

/// Row means of the component panel.
std::vector<double> equal_weight_portfolio(const SamplePanel& components);

// ---------------------------------------------------------------------------
// Moment-entropy scatter

struct ScatterRecord {
    std::string column_id;
    double root_moment_10 = 0.0;  ///< M_10^{1/10} of the centered column
    double entropy = 0.0;
    std::string bucket;
};

struct ScatterResult {
    std::vector<ScatterRecord> records;
    std::vector<std::string> skipped;  ///< constant columns
};

ScatterResult scatter_moment_entropy(const SamplePanel& panel, const std::string& bucket_label,
                                     const EntropyEstimatorConfig& entropy);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentOptions {
    Eigen::Index d = 20;
    std::vector<int> k_list{2, 10};
    EntropyEstimatorConfig entropy{};
    std::uint64_t seed = 1;
    double tol = 1e-8;
    int max_iter = 1000;
    WhiteningOptions whitening{};
};

struct KFit {
    int k = 1;
    UnmixingMatrix unmixing;
    KktResidual kkt;           ///< in-sample, fitted W
    KktResidual identity_kkt;  ///< in-sample, W = I on the whitened data
    TailReport in_sample;
    TailReport out_sample;
};

struct ExperimentResult {
    std::string boundary;
    Eigen::Index in_rows = 0;
    Eigen::Index out_rows = 0;
    WhiteningTransform whitening;
    std::vector<KFit> fits;  ///< in k_list order

    /// In- and out-of-sample report for every k, in k_list order.
    std::vector<TailReport> reports() const;
};

/// Splits at `boundary`, fits whitening and ICA on the in-sample bucket for
/// each k, and reports both buckets through the fitted transforms.
ExperimentResult run_experiment(const SamplePanel& panel, const std::string& boundary,
                                const ExperimentOptions& options);

nlohmann::json to_json(const TailReport& report);
nlohmann::json to_json(const KktResidual& residual);
nlohmann::json to_json(const ExperimentResult& result);

}  // namespace tailica
