#include "tailica/eval.hpp"

#include "tailica/error.hpp"
#include "tailica/moments.hpp"
#include "tailica/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace tailica {

namespace {

constexpr int kCoreBins = 41;
constexpr int kTailBins = 30;

QuantileSet quantiles_of(const std::vector<double>& values) {
    return {quantile(values, 0.001), quantile(values, 0.01), quantile(values, 0.99), quantile(values, 0.999)};
}

std::vector<double> pooled_values(const SamplePanel& panel) {
    const auto& data = panel.data();
    return std::vector<double>(data.data(), data.data() + data.size());
}

nlohmann::json to_json(const QuantileSet& q) {
    return {{"q0.001", q.q001}, {"q0.01", q.q01}, {"q0.99", q.q99}, {"q0.999", q.q999}};
}

nlohmann::json to_json(const DistributionSummary& s) {
    return {{"count", s.count},
            {"quantiles", to_json(s.quantiles)},
            {"abs_q0.999", s.abs_q999},
            {"central_mass", s.central_mass},
            {"root_moment", s.root_moment},
            {"excess_kurtosis", s.excess_kurtosis}};
}

}  // namespace

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw DataError("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile probability outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Histogram tail_histogram(std::span<const double> values) {
    if (values.empty()) throw DataError("histogram of an empty sample");
    double reach = 0.0;
    double sq = 0.0;
    for (double v : values) {
        reach = std::max(reach, std::abs(v));
        sq += v * v;
    }
    if (reach == 0.0) reach = 1.0;
    const double core = std::sqrt(sq / static_cast<double>(values.size()));

    Histogram h;
    const int total = kCoreBins + 2 * kTailBins;
    if (!(core > 0.0) || core >= reach) {
        for (int i = 0; i <= total; ++i) h.edges.push_back(-reach + 2.0 * reach * i / total);
    } else {
        std::vector<double> tail;  // core .. reach, kTailBins + 1 edges
        for (int i = 0; i <= kTailBins; ++i) tail.push_back(core * std::pow(reach / core, double(i) / kTailBins));
        tail.back() = reach;
        for (int i = kTailBins; i > 0; --i) h.edges.push_back(-tail[static_cast<std::size_t>(i)]);
        for (int i = 0; i <= kCoreBins; ++i) h.edges.push_back(-core + 2.0 * core * i / kCoreBins);
        for (int i = 1; i <= kTailBins; ++i) h.edges.push_back(tail[static_cast<std::size_t>(i)]);
    }
    h.counts.assign(h.edges.size() - 1, 0);
    for (double v : values) {
        auto bin = std::upper_bound(h.edges.begin(), h.edges.end(), v) - h.edges.begin() - 1;
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(h.counts.size()) - 1);
        ++h.counts[static_cast<std::size_t>(bin)];
    }
    return h;
}

DistributionSummary summarize(std::span<const double> values, int k) {
    DistributionSummary out;
    std::vector<double> copy(values.begin(), values.end());
    out.count = copy.size();
    out.quantiles = quantiles_of(copy);
    std::vector<double> abs_values(copy.size());
    std::size_t central = 0;
    for (std::size_t i = 0; i < copy.size(); ++i) {
        abs_values[i] = std::abs(copy[i]);
        central += abs_values[i] < 1.0;
    }
    out.abs_q999 = quantile(std::move(abs_values), 0.999);
    out.central_mass = static_cast<double>(central) / static_cast<double>(copy.size());
    out.root_moment = root_moment(values, MomentOrder(2 * k)).value;
    out.excess_kurtosis = excess_kurtosis(values);
    out.histogram = tail_histogram(values);
    return out;
}

std::vector<double> equal_weight_portfolio(const SamplePanel& components) {
    const Eigen::VectorXd means = components.data().rowwise().mean();
    return std::vector<double>(means.data(), means.data() + means.size());
}

TailReport tail_report(const SamplePanel& components, int k, const std::string& bucket,
                       const EntropyEstimatorConfig& entropy) {
    TailReport report;
    report.k = k;
    report.bucket = bucket;
    for (Eigen::Index j = 0; j < components.cols(); ++j) {
        const auto column = components.column(j);
        ComponentTail tail;
        tail.id = components.column_ids()[static_cast<std::size_t>(j)];
        tail.quantiles = quantiles_of(std::vector<double>(column.begin(), column.end()));
        tail.root_moment = root_moment(column, MomentOrder(2 * k)).value;
        tail.excess_kurtosis = excess_kurtosis(column);
        tail.entropy = estimate_entropy(column, entropy).value;
        report.entropy_sum += tail.entropy;
        report.components.push_back(std::move(tail));
    }
    const auto pooled = pooled_values(components);
    report.pooled = summarize(pooled, k);
    report.portfolio = summarize(equal_weight_portfolio(components), k);
    return report;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("correlation needs two equal-length samples");
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::Map<const Eigen::VectorXd> a(x.data(), n);
    const Eigen::Map<const Eigen::VectorXd> b(y.data(), n);
    const Eigen::VectorXd ca = a.array() - a.mean();
    const Eigen::VectorXd cb = b.array() - b.mean();
    return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

ScatterResult scatter_moment_entropy(const SamplePanel& panel, const std::string& bucket_label,
                                     const EntropyEstimatorConfig& entropy) {
    const SamplePanel centered = center(panel);
    ScatterResult out;
    for (Eigen::Index j = 0; j < centered.cols(); ++j) {
        const auto& id = centered.column_ids()[static_cast<std::size_t>(j)];
        const auto column = centered.column(j);
        if (std::all_of(column.begin(), column.end(), [](double v) { return v == 0.0; })) {
            out.skipped.push_back(id);
            continue;
        }
        out.records.push_back({id, root_moment(column, MomentOrder(10)).value,
                               estimate_entropy(column, entropy).value, bucket_label});
    }
    return out;
}

std::vector<TailReport> ExperimentResult::reports() const {
    std::vector<TailReport> out;
    for (const auto& fit : fits) {
        out.push_back(fit.in_sample);
        out.push_back(fit.out_sample);
    }
    return out;
}

ExperimentResult run_experiment(const SamplePanel& panel, const std::string& boundary,
                                const ExperimentOptions& options) {
    if (options.k_list.empty()) throw std::invalid_argument("experiment needs at least one k");
    for (int k : options.k_list)
        if (k < 1) throw std::invalid_argument("contrast order k must be >= 1");
    const BucketSplit split = split_buckets(panel, boundary);

    ExperimentResult result;
    result.boundary = boundary;
    result.in_rows = split.in_sample.rows();
    result.out_rows = split.out_sample.rows();
    result.whitening = fit_whitening(split.in_sample, options.d, options.whitening);
    const SamplePanel white_in = apply_whitening(result.whitening, split.in_sample);
    const SamplePanel white_out = apply_whitening(result.whitening, split.out_sample);
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(white_in.cols(), white_in.cols());

    result.fits.resize(options.k_list.size());
    parallel_for(options.k_list.size(), [&](std::size_t idx) {
        const int k = options.k_list[idx];
        KFit& fit = result.fits[idx];
        fit.k = k;
        IcaOptions ica;
        ica.tol = options.tol;
        ica.max_iter = options.max_iter;
        fit.unmixing = fit_ica(white_in, ContrastSpec(k), options.seed, ica);
        fit.kkt = kkt_residual(white_in, fit.unmixing.W, k);
        fit.identity_kkt = kkt_residual(white_in, identity, k);
        fit.in_sample = tail_report(transform(fit.unmixing, white_in), k, "in", options.entropy);
        fit.out_sample = tail_report(transform(fit.unmixing, white_out), k, "out", options.entropy);
    });
    return result;
}

nlohmann::json to_json(const KktResidual& residual) {
    return {{"off_diagonal_max", residual.off_diagonal_max},
            {"orthonormality_max", residual.orthonormality_max},
            {"asymmetry_max", residual.asymmetry_max},
            {"diagonal_max", residual.diagonal_max},
            {"tail_correlation_max", residual.tail_correlation_max}};
}

nlohmann::json to_json(const TailReport& report) {
    nlohmann::json components = nlohmann::json::array();
    for (const auto& c : report.components) {
        components.push_back({{"id", c.id},
                              {"quantiles", to_json(c.quantiles)},
                              {"root_moment", c.root_moment},
                              {"excess_kurtosis", c.excess_kurtosis},
                              {"entropy", c.entropy}});
    }
    return {{"k", report.k},
            {"bucket", report.bucket},
            {"pooled", to_json(report.pooled)},
            {"portfolio", to_json(report.portfolio)},
            {"entropy_sum", report.entropy_sum},
            {"components", std::move(components)}};
}

nlohmann::json to_json(const ExperimentResult& result) {
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& fit : result.fits) {
        fits.push_back({{"k", fit.k},
                        {"iterations", fit.unmixing.iterations},
                        {"converged", fit.unmixing.converged},
                        {"kkt", to_json(fit.kkt)},
                        {"identity_kkt", to_json(fit.identity_kkt)},
                        {"reports", {to_json(fit.in_sample), to_json(fit.out_sample)}}});
    }
    return {{"boundary", result.boundary},
            {"in_rows", result.in_rows},
            {"out_rows", result.out_rows},
            {"d", result.whitening.d()},
            {"requested_d", result.whitening.requested_d},
            {"fits", std::move(fits)}};
}

}  // namespace tailica
