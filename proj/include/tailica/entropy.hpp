#pragma once

#include "tailica/panel.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace tailica {

enum class EntropyMethod { vasicek, ebrahimi, correa };

std::string_view to_string(EntropyMethod method);
EntropyMethod parse_entropy_method(std::string_view name);

/// Spacing order n; zero selects floor(sqrt(m)) at call time.
struct EntropyEstimatorConfig {
    EntropyMethod method = EntropyMethod::correa;
    std::size_t window_n = 0;
};

/// Differential entropy in nats with the parameters that produced it.
struct EntropyEstimate {
    double value = 0.0;
    EntropyMethod method = EntropyMethod::vasicek;
    std::size_t window_n = 0;
    std::size_t m = 0;
    /// Repeated order statistics nudged apart by one ulp before computing spacings.
    std::size_t ties_perturbed = 0;
};

std::size_t default_window(std::size_t m);

/// (1/(m+1)) sum_j ln[(m+1)/(2n) (x_(j+n) - x_(j-n))], order-statistic
/// indices clamped to [1, m].
EntropyEstimate vasicek_entropy(std::span<const double> sample, std::size_t n);

/// (1/m) sum_j ln[m (x_(j+n) - x_(j-n)) / (c_j n)] with boundary weights
/// c_j = 1 + (j-1)/n, 2, 1 + (m-j)/n on the lower edge, interior and upper edge.
EntropyEstimate ebrahimi_entropy(std::span<const double> sample, std::size_t n);

/// Local linear regression of the order statistics on their ranks over
/// windows of 2n + 1 points:
///   -(1/m) sum_i ln[ sum_j (x_(j) - xbar_i)(j - i) / (m sum_j (x_(j) - xbar_i)^2) ].
EntropyEstimate correa_entropy(std::span<const double> sample, std::size_t n);

EntropyEstimate estimate_entropy(std::span<const double> sample, const EntropyEstimatorConfig& config);

/// Leading-order entropy from the log moment:
///   (1/2k) ln M_{2k} + (1/2k) ln m + ln((m+1)/(2n)).
/// The neglected remainder is O(1); use it for ranking, not for values.
double entropy_moment_approximation(std::span<const double> sample, int k, std::size_t n);

/// Sum of marginal entropies of whitened components. The joint entropy is
/// unchanged by rotations, so for two rotations of the same white data the
/// one with the smaller sum has the smaller mutual information.
double mutual_information_proxy(const SamplePanel& components, const EntropyEstimatorConfig& config);

}  // namespace tailica
