#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "femon/stats.hpp"

namespace femon {

/// Long-run variance estimate together with the bandwidth that produced it.
struct LrvEstimate {
    double value = 0.0;
    double bandwidth = 0.0;
    const char* kernel = "bartlett";
};

/// Bartlett-kernel long-run variance with the Andrews AR(1) plug-in
/// bandwidth:
///   sigma2 = g0 + 2 * sum_{j=1..floor(b)} (1 - j/(b+1)) * g_j
/// where g_j are autocovariances with divisor n and
///   b = 1.1447 * (a1 * n)^(1/3),  a1 = 4 rho^2 / ((1-rho)^2 (1+rho)^2)
/// with rho the lag-1 autocorrelation.  The estimate is floored at zero and
/// the bandwidth capped at n-1.  With floor(b) = 0 this reduces to the
/// plain (divisor-n) sample variance.
inline LrvEstimate bartlett_lrv(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("bartlett_lrv: need n >= 2");
    const auto n = static_cast<double>(x.size());
    const double g0 = autocovariance(x, 0);
    if (g0 <= 0.0) throw std::invalid_argument("bartlett_lrv: degenerate input (zero variance)");

    const double rho = autocovariance(x, 1) / g0;
    double bandwidth = 0.0;
    const double denom = (1.0 - rho) * (1.0 - rho) * (1.0 + rho) * (1.0 + rho);
    if (denom > 0.0) {
        const double a1 = 4.0 * rho * rho / denom;
        bandwidth = 1.1447 * std::cbrt(a1 * n);
    }
    if (bandwidth > n - 1.0) bandwidth = n - 1.0;

    const auto lags = static_cast<std::size_t>(bandwidth);
    double sigma2 = g0;
    for (std::size_t j = 1; j <= lags; ++j)
        sigma2 += 2.0 * (1.0 - static_cast<double>(j) / (bandwidth + 1.0)) * autocovariance(x, j);
    if (sigma2 < 0.0) sigma2 = 0.0;

    return LrvEstimate{sigma2, bandwidth, "bartlett"};
}

}  // namespace femon
