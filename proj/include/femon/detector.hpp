#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "femon/csv.hpp"
#include "femon/lrv.hpp"
#include "femon/series.hpp"
#include "femon/stats.hpp"

namespace femon {

/// What the detector monitors.
///  - mean:          forecast errors e_t
///  - variance:      centered squared errors (e_t - b)^2
///  - raw_mean:      raw observations y_t
///  - raw_variance:  centered squared observations (y_t - b)^2
enum class DetectorKind { mean, variance, raw_mean, raw_variance };

/// Scale estimate used to normalize the detector: the iid sample standard
/// deviation, or the square root of a Bartlett long-run variance (required
/// for the raw kinds, whose input is serially dependent).
enum class ScaleEstimator { iid_sd, bartlett_lrv };

inline bool is_raw_kind(DetectorKind kind) {
    return kind == DetectorKind::raw_mean || kind == DetectorKind::raw_variance;
}

inline bool is_variance_kind(DetectorKind kind) {
    return kind == DetectorKind::variance || kind == DetectorKind::raw_variance;
}

inline std::string to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::mean: return "mean";
        case DetectorKind::variance: return "variance";
        case DetectorKind::raw_mean: return "raw-mean";
        case DetectorKind::raw_variance: return "raw-variance";
    }
    throw std::invalid_argument("unknown DetectorKind");
}

inline DetectorKind detector_kind_from_string(const std::string& s) {
    if (s == "mean") return DetectorKind::mean;
    if (s == "variance") return DetectorKind::variance;
    if (s == "raw-mean") return DetectorKind::raw_mean;
    if (s == "raw-variance") return DetectorKind::raw_variance;
    throw std::invalid_argument("unknown detector kind '" + s + "'");
}

/// Monitoring configuration.  `critical_value` is the constant c_alpha for
/// the chosen (gamma, alpha); see calibration.hpp for how it is obtained.
struct MonitorConfig {
    DetectorKind kind = DetectorKind::mean;
    double gamma = 0.0;
    double alpha = 0.05;
    double critical_value = 0.0;
    ScaleEstimator scale = ScaleEstimator::iid_sd;

    void validate() const {
        if (!(gamma >= 0.0 && gamma < 0.5))
            throw std::invalid_argument("MonitorConfig: gamma must lie in [0, 0.5)");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("MonitorConfig: alpha must lie in (0, 1)");
        if (!(critical_value > 0.0))
            throw std::invalid_argument("MonitorConfig: critical_value must be positive");
        if (is_raw_kind(kind) && scale != ScaleEstimator::bartlett_lrv)
            throw std::invalid_argument("MonitorConfig: raw kinds require the Bartlett "
                                        "long-run variance scale");
    }
};

/// Boundary weight g(m, k, gamma) = sqrt(m) * (1 + k/m) * (k/(k+m))^gamma.
inline double weight(std::size_t m, std::size_t k, double gamma) {
    if (m < 1 || k < 1) throw std::invalid_argument("weight: require m >= 1 and k >= 1");
    const auto md = static_cast<double>(m);
    const auto kd = static_cast<double>(k);
    return std::sqrt(md) * (1.0 + kd / md) * std::pow(kd / (kd + md), gamma);
}

/// One monitoring step: the detector value, its threshold, and whether the
/// boundary was crossed at this step.
struct DecisionStep {
    std::size_t k = 0;  ///< 1-based index within the monitoring block
    double detector = 0.0;
    double threshold = 0.0;
    bool alarm = false;
};

/// Running state of a detector.  Training statistics are frozen at
/// initialization; each update costs O(1).
struct DetectorState {
    MonitorConfig config;
    std::size_t m = 0;
    double b_hat = 0.0;          ///< centering used by the variance kinds
    double training_mean = 0.0;  ///< mean of the monitored transform over training
    double sigma_hat = 0.0;      ///< scale estimate from the training block
    std::size_t k = 0;           ///< monitoring steps consumed so far
    double cum = 0.0;            ///< Q(m, k): centered cumulative sum
    double q_min = 0.0;          ///< min over Q(m, 0..k)
    double q_max = 0.0;          ///< max over Q(m, 0..k)
    bool alarmed = false;

    /// Monitored transform of an incoming value.
    double transform(double x) const {
        return is_variance_kind(config.kind) ? (x - b_hat) * (x - b_hat) : x;
    }
};

/// Computes training statistics from the training block of the stream.
/// Throws on a degenerate training block (zero scale).
inline DetectorState init_detector(const ErrorStream& stream, const MonitorConfig& config) {
    stream.validate();
    config.validate();

    DetectorState state;
    state.config = config;
    state.m = stream.m;
    const std::span<const double> train(stream.errors.data(), stream.m);

    std::vector<double> transformed;
    if (is_variance_kind(config.kind)) {
        state.b_hat = mean(train);
        transformed.reserve(train.size());
        for (double e : train) transformed.push_back((e - state.b_hat) * (e - state.b_hat));
    } else {
        transformed.assign(train.begin(), train.end());
    }

    state.training_mean = mean(transformed);
    if (config.scale == ScaleEstimator::iid_sd) {
        state.sigma_hat = sample_sd(transformed);
    } else {
        state.sigma_hat = std::sqrt(bartlett_lrv(transformed).value);
    }
    if (!(state.sigma_hat > 0.0))
        throw std::invalid_argument("init_detector: degenerate training block (zero scale)");
    return state;
}

/// Consumes one monitoring value and returns the successor state together
/// with the decision taken at the new step.  Alarms are not absorbing:
/// steps keep being produced after the first crossing.
inline std::pair<DetectorState, DecisionStep> update(const DetectorState& state, double x) {
    DetectorState next = state;
    next.k = state.k + 1;
    next.cum = state.cum + (state.transform(x) - state.training_mean);

    DecisionStep step;
    step.k = next.k;
    step.detector = std::max(next.cum - state.q_min, state.q_max - next.cum);
    step.threshold = state.sigma_hat * state.config.critical_value *
                     weight(state.m, next.k, state.config.gamma);
    step.alarm = step.detector >= step.threshold;

    next.q_min = std::min(state.q_min, next.cum);
    next.q_max = std::max(state.q_max, next.cum);
    next.alarmed = state.alarmed || step.alarm;
    return {next, step};
}

struct MonitorResult {
    std::vector<DecisionStep> steps;
    std::optional<std::size_t> alarm_index;  ///< k of the first boundary crossing
};

/// Runs the detector over the whole monitoring block of the stream.
inline MonitorResult run_monitor(const ErrorStream& stream, const MonitorConfig& config) {
    DetectorState state = init_detector(stream, config);
    MonitorResult result;
    result.steps.reserve(stream.monitoring_length());
    for (std::size_t t = stream.m; t < stream.errors.size(); ++t) {
        auto [next, step] = update(state, stream.errors[t]);
        state = std::move(next);
        if (step.alarm && !result.alarm_index) result.alarm_index = step.k;
        result.steps.push_back(step);
    }
    return result;
}

/// Asymptotic mean shift of one-step forecast errors when the observation
/// mean shifts by delta under an AR(1) forecaster with coefficient phi.
inline double predicted_error_shift(double delta, double phi) {
    return delta * (1.0 - phi);
}

/// Asymptotic mean shift of centered squared errors when the error
/// variance shifts by delta_xi and the error mean by delta_mu.
inline double predicted_sq_error_shift(double delta_xi, double delta_mu) {
    return delta_xi + delta_mu * delta_mu;
}

/// Writes the step log as CSV: k, detector, threshold, alarm (0/1).
inline void write_step_log(const std::string& path, const std::vector<DecisionStep>& steps) {
    CsvTable table;
    table.header = {"k", "detector", "threshold", "alarm"};
    table.rows.reserve(steps.size());
    for (const auto& s : steps)
        table.rows.push_back({std::to_string(s.k), format_double(s.detector),
                              format_double(s.threshold), s.alarm ? "1" : "0"});
    write_csv(path, table);
}

}  // namespace femon
