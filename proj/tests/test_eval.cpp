#include "support.hpp"

#include "tailica/error.hpp"
#include "tailica/eval.hpp"
#include "tailica/moments.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <numeric>

using namespace tailica;
using tailica::testing::make_panel;

namespace {

double column_correlation(const SamplePanel& p, Eigen::Index a, Eigen::Index b) {
    return pearson_correlation(p.column(a), p.column(b));
}

void expect_monotone(const QuantileSet& q) {
    EXPECT_LE(q.q001, q.q01);
    EXPECT_LE(q.q01, q.q99);
    EXPECT_LE(q.q99, q.q999);
}

void expect_conserving(const Histogram& h, std::span<const double> values) {
    ASSERT_EQ(h.edges.size(), h.counts.size() + 1);
    EXPECT_EQ(h.counts.size(), 101u);
    EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), values.size());
    EXPECT_TRUE(std::is_sorted(h.edges.begin(), h.edges.end()));
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    EXPECT_LE(h.edges.front(), *lo);
    EXPECT_GE(h.edges.back(), *hi);
}

SyntheticMarketSpec small_market() {
    SyntheticMarketSpec spec;
    spec.n_assets = 12;
    spec.m_samples = 1200;
    spec.seed = 3;
    return spec;
}

ExperimentOptions small_options() {
    ExperimentOptions options;
    options.d = 6;
    options.k_list = {2, 5};
    options.max_iter = 300;
    return options;
}

}  // namespace

TEST(Quantile, InterpolatesOrderStatistics) {
    const std::vector<double> x{4, 1, 3, 2};
    EXPECT_EQ(quantile(x, 0.0), 1.0);
    EXPECT_EQ(quantile(x, 1.0), 4.0);
    EXPECT_EQ(quantile(x, 0.5), 2.5);
    EXPECT_NEAR(quantile(x, 0.1), 1.3, 1e-15);
    EXPECT_EQ(quantile({7.0}, 0.3), 7.0);
    EXPECT_THROW(quantile({}, 0.5), DataError);
    EXPECT_THROW(quantile(x, 1.5), std::invalid_argument);
}

TEST(TailHistogram, ConservesCountsAndCoversRange) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        auto x = tailica::testing::student_t(3000 + 100 * trial, 3.0, rng);
        if (trial % 2) for (auto& v : x) v = v * 0.01 + 0.5;
        expect_conserving(tail_histogram(x), x);
    }
    const std::vector<double> narrow{-1.0, 1.0, 0.5, -0.5, 0.0};
    expect_conserving(tail_histogram(narrow), narrow);
    const std::vector<double> zeros(10, 0.0);
    const Histogram flat = tail_histogram(zeros);
    EXPECT_EQ(std::accumulate(flat.counts.begin(), flat.counts.end(), std::size_t{0}), 10u);
}

TEST(Summarize, CentralMassAndAbsoluteQuantile) {
    std::vector<double> x;
    for (int i = 0; i < 1000; ++i) x.push_back(-2.0 + 4.0 * i / 999.0);
    const DistributionSummary s = summarize(x, 2);
    EXPECT_EQ(s.count, 1000u);
    // |x| < 1 on the middle half of an evenly spaced grid over [-2, 2].
    EXPECT_NEAR(s.central_mass, 0.5, 0.002);
    EXPECT_NEAR(s.abs_q999, 2.0, 0.005);
    expect_monotone(s.quantiles);
    EXPECT_NEAR(s.root_moment, root_moment(x, MomentOrder(4)).value, 1e-15);
    expect_conserving(s.histogram, x);
}

TEST(EqualWeightPortfolio, Examples) {
    const std::vector<double> col{1.0, -2.0, 0.5};
    EXPECT_EQ(equal_weight_portfolio(make_panel(tailica::testing::columns({col}))), col);
    std::vector<double> neg(col);
    for (auto& v : neg) v = -v;
    EXPECT_EQ(equal_weight_portfolio(make_panel(tailica::testing::columns({col, neg}))),
              (std::vector<double>{0.0, 0.0, 0.0}));
    EXPECT_EQ(equal_weight_portfolio(make_panel(tailica::testing::columns({{1, 2}, {3, 4}}))),
              (std::vector<double>{2.0, 3.0}));
}

TEST(TailReport, PooledAndPortfolioSummaries) {
    std::mt19937_64 rng(2);
    Eigen::MatrixXd raw = tailica::testing::columns(
        {tailica::testing::student_t(800, 4, rng), tailica::testing::laplace(800, 1, rng),
         tailica::testing::gaussian(800, rng)});
    const SamplePanel p = center(make_panel(raw));
    const TailReport r = tail_report(p, 3, "out", {});
    EXPECT_EQ(r.k, 3);
    EXPECT_EQ(r.bucket, "out");
    ASSERT_EQ(r.components.size(), 3u);
    EXPECT_EQ(r.pooled.count, 2400u);
    EXPECT_EQ(r.portfolio.count, 800u);
    std::vector<double> pooled(p.data().data(), p.data().data() + p.data().size());
    expect_conserving(r.pooled.histogram, pooled);
    expect_monotone(r.pooled.quantiles);
    expect_monotone(r.portfolio.quantiles);
    double total = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        const auto& c = r.components[j];
        EXPECT_EQ(c.id, p.column_ids()[j]);
        expect_monotone(c.quantiles);
        EXPECT_EQ(c.root_moment, root_moment(p.column(Eigen::Index(j)), MomentOrder(6)).value);
        EXPECT_EQ(c.entropy, correa_entropy(p.column(Eigen::Index(j)), default_window(800)).value);
        total += c.entropy;
    }
    EXPECT_NEAR(r.entropy_sum, total, 1e-12);
    EXPECT_GT(r.components[0].excess_kurtosis, r.components[2].excess_kurtosis);
}

TEST(GenerateMarket, DeterministicShapeAndIds) {
    const SyntheticMarketSpec spec = small_market();
    const SamplePanel a = generate_market(spec);
    EXPECT_EQ(a, generate_market(spec));
    EXPECT_EQ(a.rows(), 1200);
    EXPECT_EQ(a.cols(), 12);
    EXPECT_EQ(a.column_ids().front(), "S0001");
    EXPECT_EQ(a.column_ids().back(), "S0012");
    EXPECT_EQ(a.row_ids().front(), "2014-10-01");
    SyntheticMarketSpec other = spec;
    other.seed = 4;
    EXPECT_NE(generate_market(other).data(), a.data());
}

TEST(GenerateMarket, ZeroLoadingsGiveIndependentFatTails) {
    SyntheticMarketSpec spec = small_market();
    spec.m_samples = 20000;
    spec.loading_min = spec.loading_max = 0.0;
    const SamplePanel p = generate_market(spec);
    for (Eigen::Index j = 0; j < p.cols(); ++j) EXPECT_GT(excess_kurtosis(p.column(j)), 0.0) << j;
    for (Eigen::Index j = 1; j < p.cols(); ++j) EXPECT_LT(std::abs(column_correlation(p, 0, j)), 0.05);
}

TEST(GenerateMarket, UnitLoadingsGiveOneFactor) {
    SyntheticMarketSpec spec = small_market();
    spec.loading_min = spec.loading_max = 1.0;
    const SamplePanel p = generate_market(spec);
    for (Eigen::Index a = 0; a < p.cols(); ++a)
        for (Eigen::Index b = a + 1; b < p.cols(); ++b) EXPECT_GT(column_correlation(p, a, b), 0.9);
}

TEST(GenerateMarket, GaussianLimitHasNoExcessKurtosis) {
    SyntheticMarketSpec spec = small_market();
    spec.gaussian = true;
    spec.m_samples = 50000;
    const SamplePanel p = generate_market(spec);
    for (Eigen::Index j = 0; j < p.cols(); ++j) EXPECT_NEAR(excess_kurtosis(p.column(j)), 0.0, 0.1) << j;
}

TEST(GenerateMarket, ValidateRejectsImpossibleSpecs) {
    const auto bad = [](auto mutate) {
        SyntheticMarketSpec spec;
        mutate(spec);
        EXPECT_THROW(validate(spec), std::invalid_argument);
        EXPECT_THROW(generate_market(spec), std::invalid_argument);
    };
    bad([](SyntheticMarketSpec& s) { s.nu_min = 2.0; });
    bad([](SyntheticMarketSpec& s) { s.factor_nu = 1.5; });
    bad([](SyntheticMarketSpec& s) { s.nu_max = 2.5; });
    bad([](SyntheticMarketSpec& s) { s.crash_probability = 1.5; });
    bad([](SyntheticMarketSpec& s) { s.crash_probability = -0.1; });
    bad([](SyntheticMarketSpec& s) { s.loading_max = 1.2; });
    bad([](SyntheticMarketSpec& s) { s.n_assets = 0; });
    bad([](SyntheticMarketSpec& s) { s.vol_min = 0.0; });
    EXPECT_NO_THROW(validate(SyntheticMarketSpec{}));
}

TEST(RunExperiment, FourReportsAndConservation) {
    const SamplePanel panel = generate_market(small_market());
    const std::string boundary = midpoint_boundary(panel);
    const ExperimentResult r = run_experiment(panel, boundary, small_options());
    EXPECT_EQ(r.boundary, boundary);
    EXPECT_EQ(r.in_rows + r.out_rows, panel.rows());
    const auto reports = r.reports();
    ASSERT_EQ(reports.size(), 4u);
    EXPECT_EQ(reports[0].k, 2);
    EXPECT_EQ(reports[0].bucket, "in");
    EXPECT_EQ(reports[1].bucket, "out");
    EXPECT_EQ(reports[3].k, 5);
    for (const auto& rep : reports) {
        const Eigen::Index rows = rep.bucket == "in" ? r.in_rows : r.out_rows;
        EXPECT_EQ(rep.components.size(), 6u);
        EXPECT_EQ(rep.pooled.count, std::size_t(rows * 6));
        EXPECT_EQ(std::accumulate(rep.pooled.histogram.counts.begin(), rep.pooled.histogram.counts.end(), std::size_t{0}),
                  std::size_t(rows * 6));
        expect_monotone(rep.pooled.quantiles);
        for (const auto& c : rep.components) expect_monotone(c.quantiles);
    }
    EXPECT_EQ(r.whitening.d(), 6);
}

TEST(RunExperiment, BitwiseDeterministic) {
    const SamplePanel panel = generate_market(small_market());
    const std::string boundary = midpoint_boundary(panel);
    EXPECT_EQ(to_json(run_experiment(panel, boundary, small_options())).dump(),
              to_json(run_experiment(panel, boundary, small_options())).dump());
}

TEST(RunExperiment, FitNeverWorsensTailDecorrelation) {
    const SamplePanel panel = generate_market(small_market());
    const ExperimentResult r = run_experiment(panel, midpoint_boundary(panel), small_options());
    for (const auto& fit : r.fits) {
        EXPECT_LE(fit.kkt.tail_correlation_max, fit.identity_kkt.tail_correlation_max) << "k=" << fit.k;
        if (fit.k == 2) EXPECT_LE(fit.kkt.off_diagonal_max, fit.identity_kkt.off_diagonal_max);
        EXPECT_LT(fit.kkt.orthonormality_max, 1e-8);
    }
}

TEST(RunExperiment, GaussianMarketKeepsTheCentre) {
    SyntheticMarketSpec spec = small_market();
    spec.gaussian = true;
    spec.n_assets = 20;
    spec.m_samples = 3000;
    const SamplePanel panel = generate_market(spec);
    ExperimentOptions options = small_options();
    options.d = 10;
    options.k_list = {2, 10};
    options.max_iter = 200;
    const ExperimentResult r = run_experiment(panel, midpoint_boundary(panel), options);
    const double c2 = r.fits[0].out_sample.pooled.central_mass;
    const double c10 = r.fits[1].out_sample.pooled.central_mass;
    EXPECT_LT(std::abs(c10 - c2) / c2, 0.05);
}

TEST(RunExperiment, RejectsBadOptions) {
    const SamplePanel panel = generate_market(small_market());
    ExperimentOptions options = small_options();
    options.k_list.clear();
    EXPECT_THROW(run_experiment(panel, midpoint_boundary(panel), options), std::invalid_argument);
    options.k_list = {0};
    EXPECT_THROW(run_experiment(panel, midpoint_boundary(panel), options), std::invalid_argument);
    EXPECT_THROW(run_experiment(panel, "1990-01-01", small_options()), DataError);
}

TEST(Scatter, SkipsConstantColumns) {
    std::mt19937_64 rng(5);
    const auto g = tailica::testing::gaussian(500, rng);
    const SamplePanel p = make_panel(tailica::testing::columns({g, std::vector<double>(500, 0.25), g}));
    const ScatterResult s = scatter_moment_entropy(p, "in", {});
    ASSERT_EQ(s.records.size(), 2u);
    EXPECT_EQ(s.skipped, std::vector<std::string>{"c1"});
    EXPECT_EQ(s.records[0].column_id, "c0");
    EXPECT_EQ(s.records[1].column_id, "c2");
    EXPECT_EQ(s.records[0].bucket, "in");
    for (const auto& rec : s.records) {
        EXPECT_TRUE(std::isfinite(rec.root_moment_10));
        EXPECT_TRUE(std::isfinite(rec.entropy));
    }
}

TEST(Scatter, GaussianScaleOracle) {
    std::mt19937_64 rng(6);
    std::vector<std::vector<double>> cols;
    std::vector<double> sigma;
    for (double s : {0.1, 0.3, 1.0, 2.0, 5.0, 20.0}) {
        auto x = tailica::testing::gaussian(20000, rng);
        for (auto& v : x) v *= s;
        cols.push_back(x);
        sigma.push_back(s);
    }
    const ScatterResult r = scatter_moment_entropy(make_panel(tailica::testing::columns(cols)), "all", {});
    ASSERT_EQ(r.records.size(), sigma.size());
    std::vector<double> log_sigma;
    std::vector<double> log_root;
    for (std::size_t j = 0; j < sigma.size(); ++j) {
        EXPECT_NEAR(r.records[j].entropy, std::log(sigma[j]) + 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 0.05);
        // E z^10 = 945 for a standard normal.
        EXPECT_NEAR(r.records[j].root_moment_10 / sigma[j], std::pow(945.0, 0.1), 0.1);
        log_sigma.push_back(std::log(sigma[j]));
        log_root.push_back(std::log(r.records[j].root_moment_10));
    }
    EXPECT_GT(pearson_correlation(log_root, log_sigma), 0.999);
}

TEST(Scatter, StudentTEnsembleIsStronglyPositive) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> nu(3.0, 10.0);
    std::uniform_real_distribution<double> log_scale(std::log(0.2), std::log(5.0));
    std::vector<std::vector<double>> cols;
    for (int c = 0; c < 200; ++c) {
        auto x = tailica::testing::student_t(1000, nu(rng), rng);
        const double s = std::exp(log_scale(rng));
        for (auto& v : x) v *= s;
        cols.push_back(x);
    }
    const ScatterResult r = scatter_moment_entropy(make_panel(tailica::testing::columns(cols)), "all", {});
    std::vector<double> log_root;
    std::vector<double> entropy;
    for (const auto& rec : r.records) {
        log_root.push_back(std::log(rec.root_moment_10));
        entropy.push_back(rec.entropy);
    }
    EXPECT_GT(pearson_correlation(log_root, entropy), 0.8);
}

TEST(PearsonCorrelation, Examples) {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{2, 4, 6, 8};
    const std::vector<double> z{4, 3, 2, 1};
    EXPECT_NEAR(pearson_correlation(x, y), 1.0, 1e-15);
    EXPECT_NEAR(pearson_correlation(x, z), -1.0, 1e-15);
    EXPECT_THROW(pearson_correlation(x, std::vector<double>{1, 2}), std::invalid_argument);
}
