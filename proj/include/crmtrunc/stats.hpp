#pragma once

// Small statistics kit: streaming moments, Kolmogorov-Smirnov and chi-square
// goodness-of-fit tests, and least-squares slopes.  Used by the Monte-Carlo
// bound evaluators and the empirical validation oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "special.hpp"

namespace crm {

// Welford streaming mean/variance.
struct RunningMoments {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double std_err() const {
        return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

// CDF of Gamma(shape, rate).
inline double gamma_cdf(double shape, double rate, double x) {
    if (x <= 0.0) return 0.0;
    return gamma_p(shape, rate * x);
}

// Asymptotic Kolmogorov distribution Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}.
inline double kolmogorov_q(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Two-sided KS test of a sample against a continuous reference CDF.
inline double ks_test_pvalue(std::vector<double> sample,
                             const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::abs(f - lo), std::abs(hi - f)));
    }
    const double sq = std::sqrt(n);
    return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
}

// Chi-square goodness of fit; expected counts must be positive.
inline double chi_square_gof_pvalue(const std::vector<double>& observed,
                                    const std::vector<double>& expected) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double diff = observed[i] - expected[i];
        stat += diff * diff / expected[i];
    }
    const double df = static_cast<double>(observed.size() - 1);
    return gamma_q(0.5 * df, 0.5 * stat);
}

// Least-squares slope of y against x.
inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace crm
