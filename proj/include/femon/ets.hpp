#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "femon/optim.hpp"
#include "femon/series.hpp"
#include "femon/stats.hpp"

namespace femon {

/// Additive exponential smoothing structures: level only (ANN), level and
/// trend (AAN), level and season (ANA).
enum class EtsStructure { ann, aan, ana };

inline std::string to_string(EtsStructure s) {
    switch (s) {
        case EtsStructure::ann: return "ANN";
        case EtsStructure::aan: return "AAN";
        case EtsStructure::ana: return "ANA";
    }
    throw std::invalid_argument("unknown EtsStructure");
}

inline EtsStructure ets_structure_from_string(const std::string& s) {
    if (s == "ANN" || s == "ann") return EtsStructure::ann;
    if (s == "AAN" || s == "aan") return EtsStructure::aan;
    if (s == "ANA" || s == "ana") return EtsStructure::ana;
    throw std::invalid_argument("unknown ETS structure '" + s + "'");
}

/// Additive ETS model in innovations (error-correction) form.
struct EtsSpec {
    EtsStructure structure = EtsStructure::ann;
    double alpha = 0.3;
    double beta = 0.0;   ///< trend smoothing (AAN only)
    double gamma = 0.0;  ///< seasonal smoothing (ANA only)
    int period = 1;      ///< seasonal period (ANA only, >= 2)
    double init_level = 0.0;
    double init_trend = 0.0;
    std::vector<double> init_seasonals;  ///< zero-sum, length = period
    double sigma2 = 1.0;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("EtsSpec: alpha must lie in (0, 1)");
        if (structure == EtsStructure::aan && !(beta > 0.0 && beta <= alpha))
            throw std::invalid_argument("EtsSpec: beta must lie in (0, alpha]");
        if (structure == EtsStructure::ana) {
            if (!(gamma > 0.0 && gamma < 1.0 - alpha))
                throw std::invalid_argument("EtsSpec: gamma must lie in (0, 1 - alpha)");
            if (period < 2) throw std::invalid_argument("EtsSpec: period must be >= 2");
            if (init_seasonals.size() != static_cast<std::size_t>(period))
                throw std::invalid_argument("EtsSpec: need one initial seasonal per season");
            double sum = 0.0;
            for (double s : init_seasonals) sum += s;
            if (std::abs(sum) > 1e-6)
                throw std::invalid_argument("EtsSpec: initial seasonals must sum to zero");
        }
        if (!(sigma2 > 0.0)) throw std::invalid_argument("EtsSpec: sigma2 must be positive");
    }
};

/// Running smoothing state.  `seasonals` is kept in upcoming order:
/// seasonals.front() applies to the next observation.
struct EtsState {
    double level = 0.0;
    double trend = 0.0;
    std::vector<double> seasonals;
};

inline EtsState initial_state(const EtsSpec& spec) {
    EtsState state;
    state.level = spec.init_level;
    state.trend = spec.init_trend;
    state.seasonals = spec.init_seasonals;
    return state;
}

/// Forecast of the next observation from the current state.
inline double ets_forecast(const EtsSpec& spec, const EtsState& state) {
    switch (spec.structure) {
        case EtsStructure::ann: return state.level;
        case EtsStructure::aan: return state.level + state.trend;
        case EtsStructure::ana: return state.level + state.seasonals.front();
    }
    throw std::invalid_argument("unknown EtsStructure");
}

/// Error-correction update with the just-realized one-step error, followed
/// by the forecast for the next index.  Returns (forecast, new_state).
inline std::pair<double, EtsState> ets_one_step(const EtsSpec& spec, const EtsState& state,
                                                double last_error) {
    EtsState next = state;
    switch (spec.structure) {
        case EtsStructure::ann:
            next.level = state.level + spec.alpha * last_error;
            break;
        case EtsStructure::aan:
            next.level = state.level + state.trend + spec.alpha * last_error;
            next.trend = state.trend + spec.beta * last_error;
            break;
        case EtsStructure::ana: {
            next.level = state.level + spec.alpha * last_error;
            const double updated = state.seasonals.front() + spec.gamma * last_error;
            next.seasonals.assign(state.seasonals.begin() + 1, state.seasonals.end());
            next.seasonals.push_back(updated);
            break;
        }
    }
    return {ets_forecast(spec, next), next};
}

/// Streaming one-step forecaster with frozen parameters, mirroring
/// ArmaForecaster's interface.
class EtsForecaster {
public:
    explicit EtsForecaster(EtsSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        state_ = initial_state(spec_);
        forecast_ = ets_forecast(spec_, state_);
    }

    double forecast_next() const { return forecast_; }

    double observe(double y) {
        const double error = y - forecast_;
        auto [next_forecast, next_state] = ets_one_step(spec_, state_, error);
        forecast_ = next_forecast;
        state_ = std::move(next_state);
        return error;
    }

private:
    EtsSpec spec_;
    EtsState state_;
    double forecast_ = 0.0;
};

struct EtsFitReport {
    EtsSpec spec;
    double sse = 0.0;
    double aic = 0.0;
    std::size_t n = 0;
    bool converged = false;
};

namespace detail {

inline double ets_sse(const EtsSpec& spec, const std::vector<double>& values) {
    EtsState state = initial_state(spec);
    double forecast = ets_forecast(spec, state);
    double sse = 0.0;
    for (double y : values) {
        const double e = y - forecast;
        sse += e * e;
        auto [f, s] = ets_one_step(spec, state, e);
        forecast = f;
        state = std::move(s);
    }
    return sse;
}

}  // namespace detail

/// Fits an additive ETS model by minimizing the one-step squared-error sum
/// with Nelder-Mead.  Smoothing parameters start at alpha = 0.3,
/// beta = 0.1, gamma = 0.1 and are kept inside their admissible box
/// (alpha in (0,1), beta in (0, alpha], gamma in (0, 1 - alpha)) by an
/// infinite penalty; initial states are optimized jointly.
inline EtsFitReport ets_fit(const TimeSeries& series, EtsStructure structure) {
    series.validate();
    const std::size_t n = series.size();
    const int period = series.frequency;
    if (structure == EtsStructure::ana && period < 2)
        throw std::invalid_argument("ets_fit: ANA needs a seasonal frequency >= 2");
    const std::size_t min_n =
        structure == EtsStructure::ana ? 2 * static_cast<std::size_t>(period) + 2 : 4;
    if (n < min_n) throw std::invalid_argument("ets_fit: series too short to fit");

    const auto sp = static_cast<std::size_t>(period);
    const double grand_mean = mean(series.values);

    // Start values: level from the overall mean, seasonal offsets from
    // per-season means over the leading complete cycles.
    std::vector<double> season_start;
    if (structure == EtsStructure::ana) {
        season_start.assign(sp, 0.0);
        std::vector<std::size_t> counts(sp, 0);
        const std::size_t full = (n / sp) * sp;
        for (std::size_t t = 0; t < full; ++t) {
            season_start[t % sp] += series.values[t];
            ++counts[t % sp];
        }
        double avg = 0.0;
        for (std::size_t s = 0; s < sp; ++s) {
            season_start[s] = season_start[s] / static_cast<double>(counts[s]);
            avg += season_start[s];
        }
        avg /= static_cast<double>(sp);
        for (double& s : season_start) s -= avg;
    }

    const double scale = std::max(1.0, std::abs(grand_mean));
    auto build_spec = [&](const std::vector<double>& x) {
        EtsSpec spec;
        spec.structure = structure;
        spec.period = structure == EtsStructure::ana ? period : 1;
        spec.alpha = x[0];
        std::size_t i = 1;
        if (structure == EtsStructure::aan) spec.beta = x[i++];
        if (structure == EtsStructure::ana) spec.gamma = x[i++];
        spec.init_level = x[i++] * scale;
        if (structure == EtsStructure::aan) spec.init_trend = x[i++] * scale;
        if (structure == EtsStructure::ana) {
            spec.init_seasonals.assign(sp, 0.0);
            double tail = 0.0;
            for (std::size_t s = 0; s + 1 < sp; ++s) {
                spec.init_seasonals[s] = x[i + s] * scale;
                tail -= spec.init_seasonals[s];
            }
            spec.init_seasonals[sp - 1] = tail;
        }
        return spec;
    };

    auto feasible = [&](const EtsSpec& spec) {
        if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) return false;
        if (structure == EtsStructure::aan && !(spec.beta > 0.0 && spec.beta <= spec.alpha))
            return false;
        if (structure == EtsStructure::ana &&
            !(spec.gamma > 0.0 && spec.gamma < 1.0 - spec.alpha))
            return false;
        return true;
    };

    std::vector<double> start{0.3};
    if (structure == EtsStructure::aan) start.push_back(0.1);
    if (structure == EtsStructure::ana) start.push_back(0.1);
    start.push_back(grand_mean / scale);
    if (structure == EtsStructure::aan) start.push_back(0.0);
    if (structure == EtsStructure::ana)
        for (std::size_t s = 0; s + 1 < sp; ++s) start.push_back(season_start[s] / scale);

    const OptimResult opt = nelder_mead(
        [&](const std::vector<double>& x) {
            const EtsSpec spec = build_spec(x);
            if (!feasible(spec)) return std::numeric_limits<double>::infinity();
            return detail::ets_sse(spec, series.values);
        },
        start, NelderMeadOptions{.initial_step = 0.1, .f_tolerance = 1e-10,
                                 .max_iterations = 5000});

    EtsFitReport report;
    report.spec = build_spec(opt.x);
    report.sse = opt.fmin;
    report.n = n;
    report.converged = opt.converged || opt.fmin <= 1e-12;
    report.spec.sigma2 = std::max(opt.fmin / static_cast<double>(n), 1e-300);
    const double k_params = static_cast<double>(start.size());
    report.aic = static_cast<double>(n) *
                     std::log(std::max(report.sse, 1e-300) / static_cast<double>(n)) +
                 2.0 * k_params;
    return report;
}

inline void to_json(nlohmann::json& j, const EtsSpec& spec) {
    j = nlohmann::json{{"type", "ets"},
                       {"structure", to_string(spec.structure)},
                       {"alpha", spec.alpha},
                       {"beta", spec.beta},
                       {"gamma", spec.gamma},
                       {"period", spec.period},
                       {"init_level", spec.init_level},
                       {"init_trend", spec.init_trend},
                       {"init_seasonals", spec.init_seasonals},
                       {"sigma2", spec.sigma2}};
}

inline void from_json(const nlohmann::json& j, EtsSpec& spec) {
    spec.structure = ets_structure_from_string(j.at("structure").get<std::string>());
    spec.alpha = j.at("alpha").get<double>();
    spec.beta = j.at("beta").get<double>();
    spec.gamma = j.at("gamma").get<double>();
    spec.period = j.at("period").get<int>();
    spec.init_level = j.at("init_level").get<double>();
    spec.init_trend = j.at("init_trend").get<double>();
    spec.init_seasonals = j.at("init_seasonals").get<std::vector<double>>();
    spec.sigma2 = j.at("sigma2").get<double>();
    spec.validate();
}

}  // namespace femon
