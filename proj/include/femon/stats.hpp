#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace femon {

inline double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Population variance (divisor n).
inline double variance(std::span<const double> x) {
    const double mu = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - mu) * (v - mu);
    return s / static_cast<double>(x.size());
}

/// Sample variance (divisor n-1); needs at least two points.
inline double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("sample_variance: need n >= 2");
    const double mu = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - mu) * (v - mu);
    return s / static_cast<double>(x.size() - 1);
}

inline double sample_sd(std::span<const double> x) {
    return std::sqrt(sample_variance(x));
}

/// Autocovariance at the given lag with divisor n (demeaned).
inline double autocovariance(std::span<const double> x, std::size_t lag) {
    if (x.empty()) throw std::invalid_argument("autocovariance: empty input");
    if (lag >= x.size()) throw std::invalid_argument("autocovariance: lag >= n");
    const double mu = mean(x);
    double s = 0.0;
    for (std::size_t t = lag; t < x.size(); ++t)
        s += (x[t] - mu) * (x[t - lag] - mu);
    return s / static_cast<double>(x.size());
}

inline double autocorrelation(std::span<const double> x, std::size_t lag) {
    const double g0 = autocovariance(x, 0);
    if (g0 <= 0.0) throw std::invalid_argument("autocorrelation: zero variance");
    return autocovariance(x, lag) / g0;
}

/// Empirical quantile as the order statistic with index ceil(p*n) - 1
/// (1-based ceil(p*n)), matching the convention used for simulated
/// critical values.  Sorts a copy.
inline double quantile(std::vector<double> x, double p) {
    if (x.empty()) throw std::invalid_argument("quantile: empty input");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must be in (0, 1]");
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    auto idx = static_cast<std::size_t>(std::ceil(p * n));
    if (idx == 0) idx = 1;
    if (idx > x.size()) idx = x.size();
    return x[idx - 1];
}

/// Ljung-Box portmanteau statistic over lags 1..h.
inline double ljung_box(std::span<const double> x, std::size_t h) {
    if (h == 0 || h >= x.size())
        throw std::invalid_argument("ljung_box: need 0 < h < n");
    const auto n = static_cast<double>(x.size());
    double q = 0.0;
    for (std::size_t k = 1; k <= h; ++k) {
        const double rk = autocorrelation(x, k);
        q += rk * rk / (n - static_cast<double>(k));
    }
    return n * (n + 2.0) * q;
}

/// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace femon
