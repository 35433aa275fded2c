#pragma once

#include <span>
#include <vector>

namespace tailica {

/// Order p >= 1 of a sample moment.
class MomentOrder {
public:
    explicit MomentOrder(int p);
    int value() const noexcept { return p_; }
    bool is_even() const noexcept { return p_ % 2 == 0; }

private:
    int p_;
};

struct SampleExtremes {
    double x_max = 0.0;
    double x_min = 0.0;
    double x_inf = 0.0;  ///< max |x_i| = max(x_max, -x_min)
};

/// Signed root of a moment, sign(M_p) |M_p|^(1/p).
struct RootMoment {
    double value = 0.0;
    /// Odd order with x_min + x_max == 0: the limit is ambiguous, and `value`
    /// holds the even-order root M_{p+1}^{1/(p+1)} instead.
    bool extreme_tie = false;
};

SampleExtremes extremes(std::span<const double> sample);

/// (1/m) sum x_i^p, summed over x_i / s where s is the power of two at or just
/// above max |x_i|. The scaling is exact in binary, so the only rounding is in
/// the powers and the sum.
double moment(std::span<const double> sample, MomentOrder p);

RootMoment root_moment(std::span<const double> sample, MomentOrder p);

/// ln M_{2k} = -ln m + 2k ln x_inf + ln sum (x_i / x_inf)^{2k}; finite for any
/// k as long as some x_i != 0.
double log_moment(std::span<const double> sample, int k);

/// The amplitude filter (x_i / x_inf)^p; entries are in [-1, 1] and the
/// max-abs element maps to +-1.
std::vector<double> filter_weights(std::span<const double> sample, MomentOrder p);

/// (1/m) sum a_i b_i^q with the same power-of-two scaling as `moment`.
/// moment(x, p) == cross_moment(x, x, p - 1) bit for bit.
double cross_moment(std::span<const double> a, std::span<const double> b, int q);

/// Excess kurtosis M_4 / M_2^2 - 3 of the sample as given (no re-centering).
double excess_kurtosis(std::span<const double> sample);

/// Power of two at or just above |x|; 0 for x == 0.
double binary_scale(double x);

}  // namespace tailica
