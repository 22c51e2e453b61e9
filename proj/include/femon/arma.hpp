#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "femon/linreg.hpp"
#include "femon/optim.hpp"
#include "femon/series.hpp"

namespace femon {

/// Deterministic mean structure handled through regression: an intercept,
/// optional zero-sum seasonal offsets, and an optional linear trend.  The
/// rule is generative (indexed by absolute time), so forecasts extend it
/// beyond the fitting window.
struct SeasonalDummies {
    int period = 0;               ///< seasonal period (> 1) or 0 for none
    std::vector<double> offsets;  ///< one offset per season, summing to zero
    bool trend = false;
    double trend_coef = 0.0;

    void validate() const {
        if (period == 0) {
            if (!offsets.empty())
                throw std::invalid_argument("SeasonalDummies: offsets given without a period");
        } else {
            if (period < 2) throw std::invalid_argument("SeasonalDummies: period must be >= 2");
            if (offsets.size() != static_cast<std::size_t>(period))
                throw std::invalid_argument("SeasonalDummies: need one offset per season");
            double sum = 0.0;
            for (double o : offsets) sum += o;
            if (std::abs(sum) > 1e-6)
                throw std::invalid_argument("SeasonalDummies: offsets must sum to zero");
        }
    }
};

/// Multiplicative seasonal AR(1) factor (1 - coef * B^period).
struct SeasonalArTerm {
    int period = 0;
    double coef = 0.0;

    void validate() const {
        if (period < 2) throw std::invalid_argument("SeasonalArTerm: period must be >= 2");
    }
};

/// ARMA(p, q) specification with optional regression mean and seasonal AR:
///   phi(B) (1 - Phi B^s) (Y_t - mu_t) = theta(B) eps_t,
/// with phi(B) = 1 - phi_1 B - ... - phi_p B^p and
/// theta(B) = 1 + theta_1 B + ... + theta_q B^q.
struct ArmaSpec {
    std::vector<double> phi;
    std::vector<double> theta;
    double lambda = 0.0;  ///< intercept of the mean structure
    double sigma2 = 1.0;  ///< innovation variance
    std::optional<SeasonalDummies> regressors;
    std::optional<SeasonalArTerm> seasonal_ar;

    std::size_t p() const { return phi.size(); }
    std::size_t q() const { return theta.size(); }

    void validate() const;

    /// Mean at 1-based time index t (intercept + season offset + trend).
    double mean_at(std::size_t t) const {
        double mu = lambda;
        if (regressors) {
            if (regressors->period > 1) {
                const auto period = static_cast<std::size_t>(regressors->period);
                mu += regressors->offsets[(t - 1) % period];
            }
            if (regressors->trend) mu += regressors->trend_coef * static_cast<double>(t);
        }
        return mu;
    }
};

/// Smallest root modulus of c_0 + c_1 z + ... + c_d z^d (Durand-Kerner).
/// A polynomial with no roots after trimming near-zero leading terms
/// returns +infinity.
inline double min_root_modulus(std::vector<double> coeffs) {
    while (!coeffs.empty() && std::abs(coeffs.back()) < 1e-14) coeffs.pop_back();
    if (coeffs.size() <= 1) return std::numeric_limits<double>::infinity();

    const std::size_t degree = coeffs.size() - 1;
    std::vector<std::complex<double>> monic(coeffs.size());
    for (std::size_t i = 0; i <= degree; ++i) monic[i] = coeffs[i] / coeffs.back();

    auto eval = [&](std::complex<double> z) {
        std::complex<double> acc = monic[degree];
        for (std::size_t i = degree; i-- > 0;) acc = acc * z + monic[i];
        return acc;
    };

    std::vector<std::complex<double>> roots(degree);
    const std::complex<double> gen(0.4, 0.9);
    std::complex<double> power(1.0, 0.0);
    for (auto& r : roots) {
        power *= gen;
        r = power;
    }
    for (int iter = 0; iter < 200; ++iter) {
        double max_step = 0.0;
        for (std::size_t i = 0; i < degree; ++i) {
            std::complex<double> denom(1.0, 0.0);
            for (std::size_t j = 0; j < degree; ++j)
                if (j != i) denom *= roots[i] - roots[j];
            if (std::abs(denom) < 1e-300) continue;
            const std::complex<double> delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            max_step = std::max(max_step, std::abs(delta));
        }
        if (max_step < 1e-13) break;
    }

    double modulus = std::numeric_limits<double>::infinity();
    for (const auto& r : roots) modulus = std::min(modulus, std::abs(r));
    return modulus;
}

namespace detail {

constexpr double kRootMargin = 1e-8;

inline std::vector<double> ar_polynomial(const std::vector<double>& phi) {
    std::vector<double> coeffs{1.0};
    for (double c : phi) coeffs.push_back(-c);
    return coeffs;
}

inline std::vector<double> ma_polynomial(const std::vector<double>& theta) {
    std::vector<double> coeffs{1.0};
    for (double c : theta) coeffs.push_back(c);
    return coeffs;
}

}  // namespace detail

/// Causality: all roots of phi(z) (and the seasonal factor) strictly
/// outside the unit circle with a small margin.
inline bool is_causal(const ArmaSpec& spec) {
    if (min_root_modulus(detail::ar_polynomial(spec.phi)) <= 1.0 + detail::kRootMargin)
        return false;
    if (spec.seasonal_ar && spec.seasonal_ar->coef != 0.0) {
        const double root = std::pow(std::abs(spec.seasonal_ar->coef),
                                     -1.0 / spec.seasonal_ar->period);
        if (root <= 1.0 + detail::kRootMargin) return false;
    }
    return true;
}

/// Invertibility: all roots of theta(z) strictly outside the unit circle
/// with a small margin.
inline bool is_invertible(const ArmaSpec& spec) {
    return min_root_modulus(detail::ma_polynomial(spec.theta)) > 1.0 + detail::kRootMargin;
}

inline void ArmaSpec::validate() const {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("ArmaSpec: sigma2 must be positive");
    if (regressors) regressors->validate();
    if (seasonal_ar) seasonal_ar->validate();
    if (!is_causal(*this)) throw std::invalid_argument("ArmaSpec: AR polynomial is not causal");
    if (!is_invertible(*this))
        throw std::invalid_argument("ArmaSpec: MA polynomial is not invertible");
}

/// Streaming one-step forecaster with frozen parameters.  Time starts at
/// t = 1; call forecast_next() for the upcoming index, then observe() the
/// realized value.  Residuals follow the conditional (CSS) recursion with
/// zero pre-sample values.
class ArmaForecaster {
public:
    explicit ArmaForecaster(ArmaSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        season_ = spec_.seasonal_ar ? static_cast<std::size_t>(spec_.seasonal_ar->period) : 0;
        seasonal_coef_ = spec_.seasonal_ar ? spec_.seasonal_ar->coef : 0.0;
    }

    /// Forecast of Y at the next time index given everything observed.
    double forecast_next() const {
        const std::size_t t = z_.size() + 1;
        return spec_.mean_at(t) + predict_z();
    }

    /// Records the realized value for the index just forecast and returns
    /// the one-step error.
    double observe(double y) {
        const std::size_t t = z_.size() + 1;
        const double zhat = predict_z();
        // The seasonal lag must be taken before z_t is appended, so that it
        // reads z_{t-s} rather than z_{t-s+1}.
        const double zs = seasonal_term();
        const double z = y - spec_.mean_at(t);
        z_.push_back(z);
        w_.push_back(z - zs);
        eps_.push_back(z - zhat);
        return z - zhat;
    }

private:
    double lagged(const std::vector<double>& v, std::size_t back) const {
        // Value `back` steps before the index currently being formed.
        const std::size_t n = v.size();
        return back <= n && back >= 1 ? v[n - back] : 0.0;
    }

    double seasonal_term() const {
        return season_ > 0 ? seasonal_coef_ * lagged(z_, season_) : 0.0;
    }

    /// Conditional expectation of the demeaned value at the next index.
    double predict_z() const {
        double acc = seasonal_term();
        for (std::size_t j = 0; j < spec_.p(); ++j) acc += spec_.phi[j] * lagged(w_, j + 1);
        for (std::size_t i = 0; i < spec_.q(); ++i) acc += spec_.theta[i] * lagged(eps_, i + 1);
        return acc;
    }

    ArmaSpec spec_;
    std::size_t season_ = 0;
    double seasonal_coef_ = 0.0;
    std::vector<double> z_;    // demeaned observations
    std::vector<double> w_;    // after removing the seasonal AR factor
    std::vector<double> eps_;  // conditional residuals
};

/// One-step forecast for index n+1 from a frozen model and the observed
/// history at indices 1..n.
inline double arma_one_step(const ArmaSpec& spec, const TimeSeries& history) {
    history.validate();
    ArmaForecaster forecaster(spec);
    for (double y : history.values) forecaster.observe(y);
    return forecaster.forecast_next();
}

/// Conditional sum of squares of the residual recursion for a fixed spec
/// over demeaned values z (z_1 corresponds to time index 1).
inline double arma_css(const std::vector<double>& z, const std::vector<double>& phi,
                       const std::vector<double>& theta, double seasonal_coef,
                       std::size_t seasonal_period) {
    const std::size_t n = z.size();
    const std::size_t p = phi.size(), q = theta.size();
    std::vector<double> w(n), eps(n);
    double sse = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double zs = (seasonal_period > 0 && t >= seasonal_period)
                              ? seasonal_coef * z[t - seasonal_period]
                              : 0.0;
        w[t] = z[t] - zs;
        double e = w[t];
        for (std::size_t j = 0; j < p; ++j)
            if (t > j) e -= phi[j] * w[t - j - 1];
        for (std::size_t i = 0; i < q; ++i)
            if (t > i) e -= theta[i] * eps[t - i - 1];
        eps[t] = e;
        sse += e * e;
    }
    return sse;
}

namespace detail {

/// Maps unconstrained reals to a causal AR coefficient vector through
/// reflection coefficients r_i = tanh(u_i) and the Levinson-Durbin
/// recursion.  The same map with negated output yields invertible MA
/// coefficients.
inline std::vector<double> pacf_to_ar(const std::vector<double>& u) {
    const std::size_t p = u.size();
    std::vector<double> a(p, 0.0), prev(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
        const double r = std::tanh(u[k]);
        a[k] = r;
        for (std::size_t j = 0; j < k; ++j) a[j] = prev[j] - r * prev[k - 1 - j];
        for (std::size_t j = 0; j <= k; ++j) prev[j] = a[j];
    }
    return a;
}

}  // namespace detail

/// Report of a single ARMA fit: the chosen spec plus fit diagnostics.
struct ArmaFitReport {
    ArmaSpec spec;
    double sse = 0.0;
    double aic = 0.0;
    std::size_t n = 0;
    bool converged = false;
};

/// Options for arma_fit.  With `select_order` the (p, q) grid
/// [0..max_p] x [0..max_q] is searched and the AIC-minimal converged cell
/// wins; otherwise exactly (max_p, max_q) is fitted.
struct ArmaFitOptions {
    int max_p = 3;
    int max_q = 3;
    bool select_order = true;
    bool seasonal_dummies = false;  ///< regression dummies at series.frequency
    bool trend = false;
    bool seasonal_ar = false;  ///< multiplicative (1 - Phi B^s) factor
    NelderMeadOptions optimizer{.initial_step = 0.2, .f_tolerance = 1e-9,
                                .max_iterations = 4000};
};

/// Two-stage conditional-sum-of-squares fit: the regression mean is
/// estimated by OLS, then ARMA coefficients by Nelder-Mead over a
/// reflection-coefficient parametrization that enforces causality and
/// invertibility.  AIC = n log(SSE/n) + 2 (#ARMA + #regression params).
inline ArmaFitReport arma_fit(const TimeSeries& series, const ArmaFitOptions& options = {}) {
    series.validate();
    if (options.max_p < 0 || options.max_q < 0)
        throw std::invalid_argument("arma_fit: max_p and max_q must be non-negative");
    const std::size_t n = series.size();
    const int period = series.frequency;
    const bool dummies = options.seasonal_dummies && period > 1;
    if (options.seasonal_dummies && period <= 1)
        throw std::invalid_argument("arma_fit: seasonal dummies need frequency > 1");
    if (options.seasonal_ar && period <= 1)
        throw std::invalid_argument("arma_fit: seasonal AR needs frequency > 1");
    const std::size_t min_n = 10 + (dummies ? static_cast<std::size_t>(period) : 0);
    if (n < min_n) throw std::invalid_argument("arma_fit: series too short to fit");

    // Stage 1: regression mean by OLS (intercept, sum-contrast seasonal
    // dummies, optional trend), then demean.
    std::vector<std::vector<double>> columns;
    columns.emplace_back(n, 1.0);
    if (dummies) {
        const auto sp = static_cast<std::size_t>(period);
        for (std::size_t s = 0; s + 1 < sp; ++s) {
            std::vector<double> col(n, 0.0);
            for (std::size_t t = 0; t < n; ++t) {
                const std::size_t season = t % sp;
                if (season == s) col[t] = 1.0;
                else if (season == sp - 1) col[t] = -1.0;
            }
            columns.push_back(std::move(col));
        }
    }
    if (options.trend) {
        std::vector<double> col(n);
        for (std::size_t t = 0; t < n; ++t) col[t] = static_cast<double>(t + 1);
        columns.push_back(std::move(col));
    }
    const std::vector<double> beta = ols_solve(columns, series.values);
    const std::size_t n_beta = beta.size();

    SeasonalDummies reg;
    double lambda = beta[0];
    if (dummies) {
        reg.period = period;
        reg.offsets.assign(static_cast<std::size_t>(period), 0.0);
        double tail = 0.0;
        for (int s = 0; s + 1 < period; ++s) {
            reg.offsets[static_cast<std::size_t>(s)] = beta[static_cast<std::size_t>(s) + 1];
            tail -= beta[static_cast<std::size_t>(s) + 1];
        }
        reg.offsets[static_cast<std::size_t>(period - 1)] = tail;
    }
    if (options.trend) {
        reg.trend = true;
        reg.trend_coef = beta.back();
    }

    std::vector<double> z(n);
    for (std::size_t t = 0; t < n; ++t) {
        double fit = lambda;
        if (dummies) fit += reg.offsets[t % static_cast<std::size_t>(period)];
        if (options.trend) fit += reg.trend_coef * static_cast<double>(t + 1);
        z[t] = series.values[t] - fit;
    }

    // Stage 2: CSS over the (p, q) grid.
    struct Candidate {
        std::size_t p = 0, q = 0;
        std::vector<double> phi, theta;
        double seasonal_coef = 0.0;
        double sse = 0.0, aic = 0.0;
        bool converged = false;
    };

    const auto seasonal_period =
        options.seasonal_ar ? static_cast<std::size_t>(period) : std::size_t{0};
    const int p_lo = options.select_order ? 0 : options.max_p;
    const int q_lo = options.select_order ? 0 : options.max_q;

    std::optional<Candidate> best;
    for (int p = p_lo; p <= options.max_p; ++p) {
        for (int q = q_lo; q <= options.max_q; ++q) {
            Candidate cand;
            cand.p = static_cast<std::size_t>(p);
            cand.q = static_cast<std::size_t>(q);
            const std::size_t dim = cand.p + cand.q + (seasonal_period > 0 ? 1 : 0);
            if (dim == 0) {
                cand.sse = arma_css(z, {}, {}, 0.0, 0);
                cand.converged = true;
            } else {
                auto unpack = [&](const std::vector<double>& u) {
                    std::vector<double> u_phi(u.begin(), u.begin() + p);
                    std::vector<double> u_theta(u.begin() + p, u.begin() + p + q);
                    std::vector<double> phi = detail::pacf_to_ar(u_phi);
                    std::vector<double> theta = detail::pacf_to_ar(u_theta);
                    for (double& c : theta) c = -c;
                    const double seasonal =
                        seasonal_period > 0 ? std::tanh(u.back()) : 0.0;
                    return std::tuple(std::move(phi), std::move(theta), seasonal);
                };
                const std::vector<double> start(dim, 0.1);
                const OptimResult opt = nelder_mead(
                    [&](const std::vector<double>& u) {
                        const auto [phi, theta, seasonal] = unpack(u);
                        return arma_css(z, phi, theta, seasonal, seasonal_period);
                    },
                    start, options.optimizer);
                auto [phi, theta, seasonal] = unpack(opt.x);
                cand.phi = std::move(phi);
                cand.theta = std::move(theta);
                cand.seasonal_coef = seasonal;
                cand.sse = opt.fmin;
                cand.converged = opt.converged;
            }
            if (!cand.converged && options.select_order) continue;
            // Discard cells whose optimum sits on the causality /
            // invertibility boundary.
            ArmaSpec probe;
            probe.phi = cand.phi;
            probe.theta = cand.theta;
            if (seasonal_period > 0)
                probe.seasonal_ar = SeasonalArTerm{period, cand.seasonal_coef};
            if (!is_causal(probe) || !is_invertible(probe)) {
                if (options.select_order) continue;
                cand.converged = false;
            }
            const double k_params =
                static_cast<double>(dim + n_beta);
            cand.aic = static_cast<double>(n) * std::log(cand.sse / static_cast<double>(n)) +
                       2.0 * k_params;
            if (!best || cand.aic < best->aic) best = std::move(cand);
        }
    }
    if (!best) throw std::runtime_error("arma_fit: no candidate model converged");

    ArmaFitReport report;
    report.spec.phi = best->phi;
    report.spec.theta = best->theta;
    report.spec.lambda = lambda;
    report.spec.sigma2 = best->sse / static_cast<double>(n);
    if (dummies || options.trend) report.spec.regressors = reg;
    if (seasonal_period > 0)
        report.spec.seasonal_ar = SeasonalArTerm{period, best->seasonal_coef};
    if (report.spec.sigma2 <= 0.0) report.spec.sigma2 = 1e-300;
    report.sse = best->sse;
    report.aic = best->aic;
    report.n = n;
    report.converged = best->converged;
    return report;
}

/// Asymptotic one-step forecast-error mean shift when the observation mean
/// shifts by delta and forecasts come from a frozen ARMA(p, q):
///   delta * (1 - sum phi_j) * sum psi_l,  with 1/theta(z) = sum psi_l z^l.
inline double aue_shift_formula(double delta, const std::vector<double>& phi,
                                const std::vector<double>& theta) {
    ArmaSpec probe;
    probe.phi = phi;
    probe.theta = theta;
    if (!is_invertible(probe))
        throw std::invalid_argument("aue_shift_formula: theta must be invertible");

    double phi_sum = 0.0;
    for (double c : phi) phi_sum += c;

    // psi-weights of 1/theta(z): psi_0 = 1, psi_l = -sum theta_j psi_{l-j}.
    std::vector<double> psi{1.0};
    double psi_sum = 1.0;
    for (std::size_t l = 1; l < 100000; ++l) {
        double next = 0.0;
        for (std::size_t j = 1; j <= theta.size() && j <= l; ++j)
            next -= theta[j - 1] * psi[l - j];
        psi.push_back(next);
        psi_sum += next;
        if (std::abs(next) < 1e-12 && l >= theta.size()) break;
    }
    return delta * (1.0 - phi_sum) * psi_sum;
}

inline void to_json(nlohmann::json& j, const ArmaSpec& spec) {
    j = nlohmann::json{{"type", "arma"},
                       {"phi", spec.phi},
                       {"theta", spec.theta},
                       {"lambda", spec.lambda},
                       {"sigma2", spec.sigma2}};
    if (spec.regressors) {
        j["regressors"] = {{"period", spec.regressors->period},
                           {"offsets", spec.regressors->offsets},
                           {"trend", spec.regressors->trend},
                           {"trend_coef", spec.regressors->trend_coef}};
    }
    if (spec.seasonal_ar) {
        j["seasonal_ar"] = {{"period", spec.seasonal_ar->period},
                            {"coef", spec.seasonal_ar->coef}};
    }
}

inline void from_json(const nlohmann::json& j, ArmaSpec& spec) {
    spec.phi = j.at("phi").get<std::vector<double>>();
    spec.theta = j.at("theta").get<std::vector<double>>();
    spec.lambda = j.at("lambda").get<double>();
    spec.sigma2 = j.at("sigma2").get<double>();
    spec.regressors.reset();
    spec.seasonal_ar.reset();
    if (j.contains("regressors")) {
        SeasonalDummies reg;
        reg.period = j["regressors"].at("period").get<int>();
        reg.offsets = j["regressors"].at("offsets").get<std::vector<double>>();
        reg.trend = j["regressors"].at("trend").get<bool>();
        reg.trend_coef = j["regressors"].at("trend_coef").get<double>();
        spec.regressors = std::move(reg);
    }
    if (j.contains("seasonal_ar")) {
        spec.seasonal_ar = SeasonalArTerm{j["seasonal_ar"].at("period").get<int>(),
                                          j["seasonal_ar"].at("coef").get<double>()};
    }
    spec.validate();
}

}  // namespace femon
