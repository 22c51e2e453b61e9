#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "femon/calibration.hpp"
#include "femon/csv.hpp"
#include "femon/detector.hpp"
#include "femon/forecast.hpp"
#include "femon/parallel.hpp"
#include "femon/rng.hpp"
#include "femon/series.hpp"

namespace femon {

/// Deterministic seasonal mean paths used by the simulation scenarios.
///  - sine12:    amplitude * sin(x) with x on 12 equispaced points of [0, pi]
///  - cos7:      amplitude * cos(x) with x on 7 equispaced points of [0, 2 pi]
///  - quarterly: a fixed vector of four seasonal means
enum class SeasonalKind { none, sine12, cos7, quarterly };

inline std::string to_string(SeasonalKind kind) {
    switch (kind) {
        case SeasonalKind::none: return "none";
        case SeasonalKind::sine12: return "sine12";
        case SeasonalKind::cos7: return "cos7";
        case SeasonalKind::quarterly: return "quarterly";
    }
    throw std::invalid_argument("unknown SeasonalKind");
}

inline SeasonalKind seasonal_kind_from_string(const std::string& s) {
    if (s == "none") return SeasonalKind::none;
    if (s == "sine12") return SeasonalKind::sine12;
    if (s == "cos7") return SeasonalKind::cos7;
    if (s == "quarterly") return SeasonalKind::quarterly;
    throw std::invalid_argument("unknown seasonal kind '" + s + "'");
}

/// Structural change injected after the in-control stretch.
enum class ChangeType { none, mean_shift, trend_onset, variance_shift, ar_switch };

inline std::string to_string(ChangeType type) {
    switch (type) {
        case ChangeType::none: return "none";
        case ChangeType::mean_shift: return "mean-shift";
        case ChangeType::trend_onset: return "trend-onset";
        case ChangeType::variance_shift: return "variance-shift";
        case ChangeType::ar_switch: return "ar-switch";
    }
    throw std::invalid_argument("unknown ChangeType");
}

inline ChangeType change_type_from_string(const std::string& s) {
    if (s == "none") return ChangeType::none;
    if (s == "mean-shift") return ChangeType::mean_shift;
    if (s == "trend-onset") return ChangeType::trend_onset;
    if (s == "variance-shift") return ChangeType::variance_shift;
    if (s == "ar-switch") return ChangeType::ar_switch;
    throw std::invalid_argument("unknown change type '" + s + "'");
}

struct ChangeSpec {
    ChangeType type = ChangeType::none;
    double delta_mu = 0.0;  ///< mean-shift size
    double beta = 0.0;      ///< trend slope past the changepoint
    double delta_xi = 0.0;  ///< additive innovation-variance increase
    double phi_post = 0.0;  ///< post-change AR(1) coefficient
};

struct InnovationSpec {
    bool student_t = false;
    int df = 5;  ///< degrees of freedom when student_t (variance-standardized)
};

/// Complete recipe for one simulated monitoring problem: stationary ARMA
/// noise around a deterministic seasonal mean path, with an optional
/// change that takes effect strictly after observation m + k_star.
struct ScenarioSpec {
    std::string id = "scenario";
    ArmaSpec noise;  ///< lambda is the global level; regressors must be empty
    SeasonalKind seasonal = SeasonalKind::none;
    double amplitude = 10.0;                           ///< sine12 / cos7 amplitude
    std::vector<double> quarterly_means{-2.0, 5.0, 7.0, -10.0};
    ChangeSpec change;
    std::size_t m = 300;        ///< training length
    std::size_t horizon = 1000; ///< monitoring length
    std::size_t k_star = 0;     ///< last in-control monitoring index
    InnovationSpec innovation;

    int period() const {
        switch (seasonal) {
            case SeasonalKind::none: return 1;
            case SeasonalKind::sine12: return 12;
            case SeasonalKind::cos7: return 7;
            case SeasonalKind::quarterly: return 4;
        }
        return 1;
    }

    std::size_t length() const { return m + horizon; }

    /// Last global index generated under the in-control regime.
    std::size_t change_index() const { return m + k_star; }

    bool is_null() const { return change.type == ChangeType::none; }

    void validate() const {
        noise.validate();
        if (noise.regressors)
            throw std::invalid_argument("ScenarioSpec: noise must not carry regressors; the "
                                        "seasonal path is specified separately");
        if (m < 2) throw std::invalid_argument("ScenarioSpec: m must be >= 2");
        if (horizon < 1) throw std::invalid_argument("ScenarioSpec: horizon must be >= 1");
        if (!is_null() && k_star >= horizon)
            throw std::invalid_argument("ScenarioSpec: k_star must lie inside the horizon");
        if (seasonal == SeasonalKind::quarterly && quarterly_means.size() != 4)
            throw std::invalid_argument("ScenarioSpec: quarterly seasonal needs 4 means");
        if (change.type == ChangeType::ar_switch) {
            if (noise.p() != 1)
                throw std::invalid_argument("ScenarioSpec: ar-switch needs AR(1) noise");
            if (!(std::abs(change.phi_post) < 1.0))
                throw std::invalid_argument("ScenarioSpec: |phi_post| must be < 1");
        }
        if (change.type == ChangeType::variance_shift &&
            !(noise.sigma2 + change.delta_xi > 0.0))
            throw std::invalid_argument("ScenarioSpec: post-change variance must be positive");
        if (innovation.student_t && innovation.df < 3)
            throw std::invalid_argument("ScenarioSpec: student-t innovations need df >= 3");
    }

    /// Seasonal mean at 1-based series index t.
    double seasonal_at(std::size_t t) const {
        const std::size_t phase = (t - 1) % static_cast<std::size_t>(period());
        switch (seasonal) {
            case SeasonalKind::none: return 0.0;
            case SeasonalKind::sine12:
                return amplitude *
                       std::sin(std::numbers::pi * static_cast<double>(phase) / 11.0);
            case SeasonalKind::cos7:
                return amplitude *
                       std::cos(2.0 * std::numbers::pi * static_cast<double>(phase) / 6.0);
            case SeasonalKind::quarterly: return quarterly_means[phase];
        }
        return 0.0;
    }
};

/// Simulates one series of length m + horizon.  The ARMA recursion is
/// warmed up with 500 burn-in steps; every change type takes effect only
/// at global indices t > m + k_star.
inline TimeSeries generate_scenario(const ScenarioSpec& spec, std::uint64_t seed,
                                    std::uint64_t replicate = 0) {
    spec.validate();
    constexpr std::size_t kBurnIn = 500;
    const std::size_t n = spec.length();
    const std::size_t total = kBurnIn + n;

    Rng rng(seed, replicate);
    auto draw = [&]() {
        return spec.innovation.student_t ? rng.student_t(spec.innovation.df) : rng.normal();
    };

    const double sd_pre = std::sqrt(spec.noise.sigma2);
    const double sd_post = spec.change.type == ChangeType::variance_shift
                               ? std::sqrt(spec.noise.sigma2 + spec.change.delta_xi)
                               : sd_pre;

    const std::size_t p = spec.noise.p(), q = spec.noise.q();
    std::vector<double> z(total, 0.0), eps(total, 0.0);
    for (std::size_t i = 0; i < total; ++i) {
        // Global 1-based series index of this step; burn-in sits before t = 1.
        const auto t = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(kBurnIn) + 1;
        const bool post = t > static_cast<std::ptrdiff_t>(spec.change_index());

        eps[i] = (post ? sd_post : sd_pre) * draw();
        double value = eps[i];
        for (std::size_t j = 1; j <= p; ++j) {
            if (i < j) break;
            double phi_j = spec.noise.phi[j - 1];
            if (post && spec.change.type == ChangeType::ar_switch) phi_j = spec.change.phi_post;
            value += phi_j * z[i - j];
        }
        for (std::size_t j = 1; j <= q; ++j) {
            if (i < j) break;
            value += spec.noise.theta[j - 1] * eps[i - j];
        }
        z[i] = value;
    }

    TimeSeries series;
    series.frequency = spec.period();
    series.values.resize(n);
    for (std::size_t t = 1; t <= n; ++t) {
        double y = spec.noise.lambda + spec.seasonal_at(t) + z[kBurnIn + t - 1];
        if (t > spec.change_index()) {
            if (spec.change.type == ChangeType::mean_shift) y += spec.change.delta_mu;
            if (spec.change.type == ChangeType::trend_onset)
                y += spec.change.beta * static_cast<double>(t);
        }
        series.values[t - 1] = y;
    }
    return series;
}

/// Competing monitoring methods: CUSUM on raw observations, or CUSUM on
/// one-step forecast errors from an ARMA or ETS backend.
enum class MethodFamily { raw_cusum, arma_forecast_errors, ets_forecast_errors };

inline std::string to_string(MethodFamily family) {
    switch (family) {
        case MethodFamily::raw_cusum: return "raw-cusum";
        case MethodFamily::arma_forecast_errors: return "arma-forecast-errors";
        case MethodFamily::ets_forecast_errors: return "ets-forecast-errors";
    }
    throw std::invalid_argument("unknown MethodFamily");
}

inline MethodFamily method_family_from_string(const std::string& s) {
    if (s == "raw-cusum") return MethodFamily::raw_cusum;
    if (s == "arma-forecast-errors") return MethodFamily::arma_forecast_errors;
    if (s == "ets-forecast-errors") return MethodFamily::ets_forecast_errors;
    throw std::invalid_argument("unknown method '" + s + "'");
}

struct MethodSpec {
    MethodFamily family = MethodFamily::arma_forecast_errors;
    DetectorKind detector = DetectorKind::mean;  ///< mean or variance
    int max_p = 3;
    int max_q = 3;
    bool seasonal_dummies = true;  ///< ARMA: seasonal dummies when the scenario is seasonal

    void validate() const {
        if (is_raw_kind(detector))
            throw std::invalid_argument("MethodSpec: detector must be mean or variance; the "
                                        "raw-cusum family maps it to the raw kinds itself");
    }

    std::string label() const {
        return to_string(family) + "/" + femon::to_string(detector);
    }
};

/// Detector settings shared by every method in a comparison.
struct MonitorSettings {
    double gamma = 0.0;
    double alpha = 0.05;
    double critical_value = 0.0;  ///< 0 = look up CriticalTable::defaults()

    double resolve_critical() const {
        if (critical_value > 0.0) return critical_value;
        const auto c = CriticalTable::defaults().lookup(gamma, alpha);
        if (!c)
            throw std::invalid_argument("no cached critical value for gamma/alpha; pass one "
                                        "explicitly or calibrate first");
        return *c;
    }
};

/// One replicate of a cell: which RNG stream it used and where (if
/// anywhere) the detector stopped.
struct ReplicateRecord {
    std::size_t replicate = 0;  ///< RNG stream index under the master seed
    bool failed = false;        ///< forecaster fit threw; excluded from rates
    bool stopped = false;
    std::size_t stop_k = 0;  ///< monitoring index of the stop (when stopped)
};

/// Outcome of one (scenario, method) cell.
///
/// Rates follow the usual sequential-monitoring bookkeeping: the detection
/// rate counts every stop inside the horizon (so for a no-change scenario
/// it is exactly the observed false-alarm rate), the false-alarm rate
/// counts stops at or before the changepoint, and the average detection
/// delay is taken over stops strictly after the changepoint only.
struct ExperimentResult {
    std::string scenario_id;
    std::string method;
    std::size_t replicates = 0;
    std::size_t failures = 0;         ///< replicates whose fit failed (excluded from rates)
    std::size_t true_detections = 0;  ///< stops after the changepoint
    std::size_t false_alarms = 0;     ///< stops at or before the changepoint
    double detection_rate = 0.0;      ///< (true_detections + false_alarms) / (R - failures)
    double false_alarm_rate = 0.0;    ///< false_alarms / (R - failures)
    double add = std::numeric_limits<double>::quiet_NaN();  ///< mean detection delay
    double add_se = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> delays;            ///< per-detection delays behind `add`
    std::vector<ReplicateRecord> records;  ///< one entry per replicate, in order
};

/// Runs one scenario/method cell over `replicates` seeded replicates.
/// Replicate r of a given seed always sees the same simulated series, so
/// results do not depend on the worker count.
inline ExperimentResult run_cell(const ScenarioSpec& scenario, const MethodSpec& method,
                                 std::size_t replicates, std::uint64_t seed,
                                 const MonitorSettings& settings, std::size_t workers = 1) {
    scenario.validate();
    method.validate();
    if (replicates == 0) throw std::invalid_argument("run_cell: replicates must be >= 1");
    const double critical = settings.resolve_critical();

    MonitorConfig config;
    config.gamma = settings.gamma;
    config.alpha = settings.alpha;
    config.critical_value = critical;
    if (method.family == MethodFamily::raw_cusum) {
        config.kind = method.detector == DetectorKind::mean ? DetectorKind::raw_mean
                                                            : DetectorKind::raw_variance;
        config.scale = ScaleEstimator::bartlett_lrv;
    } else {
        config.kind = method.detector;
        config.scale = ScaleEstimator::iid_sd;
    }

    enum class Outcome : unsigned char { no_stop, stopped, failed };
    struct Row {
        Outcome outcome = Outcome::no_stop;
        std::size_t stop_k = 0;
    };
    std::vector<Row> rows(replicates);

    parallel_chunks(replicates, workers, [&](std::size_t first, std::size_t last) {
        for (std::size_t r = first; r < last; ++r) {
            try {
                const TimeSeries series = generate_scenario(scenario, seed, r);
                const SplitSpec split = SplitSpec::count(scenario.m);
                ErrorStream stream;
                if (method.family == MethodFamily::raw_cusum) {
                    stream = split_errors(series.values, split);
                } else {
                    const TimeSeries train = series.prefix(scenario.m);
                    FitReport report;
                    if (method.family == MethodFamily::arma_forecast_errors) {
                        ArmaFitOptions options;
                        options.max_p = method.max_p;
                        options.max_q = method.max_q;
                        options.seasonal_dummies =
                            method.seasonal_dummies && scenario.period() > 1;
                        report = fit_forecaster(train, ModelChoice::arma, options);
                    } else {
                        const ModelChoice choice = scenario.period() > 1
                                                       ? ModelChoice::ets_ana
                                                       : ModelChoice::ets_ann;
                        report = fit_forecaster(train, choice);
                    }
                    stream = generate_error_stream(series, report, split);
                }
                const MonitorResult monitor = run_monitor(stream, config);
                if (monitor.alarm_index) {
                    rows[r] = {Outcome::stopped, *monitor.alarm_index};
                } else {
                    rows[r] = {Outcome::no_stop, 0};
                }
            } catch (const std::exception&) {
                rows[r] = {Outcome::failed, 0};
            }
        }
    });

    const std::size_t k_star = scenario.is_null() ? scenario.horizon : scenario.k_star;
    ExperimentResult result;
    result.scenario_id = scenario.id;
    result.method = method.label();
    result.replicates = replicates;
    result.records.reserve(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
        const Row& row = rows[r];
        ReplicateRecord record;
        record.replicate = r;
        if (row.outcome == Outcome::failed) {
            record.failed = true;
            ++result.failures;
        } else if (row.outcome == Outcome::stopped) {
            record.stopped = true;
            record.stop_k = row.stop_k;
            if (row.stop_k > k_star) {
                ++result.true_detections;
                result.delays.push_back(static_cast<double>(row.stop_k - k_star));
            } else {
                ++result.false_alarms;
            }
        }
        result.records.push_back(record);
    }
    const std::size_t effective = replicates - result.failures;
    if (effective == 0) throw std::runtime_error("run_cell: every replicate failed to fit");
    result.detection_rate = static_cast<double>(result.true_detections + result.false_alarms) /
                            static_cast<double>(effective);
    result.false_alarm_rate =
        static_cast<double>(result.false_alarms) / static_cast<double>(effective);
    if (!result.delays.empty()) {
        result.add = mean(result.delays);
        result.add_se = result.delays.size() > 1
                            ? sample_sd(result.delays) /
                                  std::sqrt(static_cast<double>(result.delays.size()))
                            : 0.0;
    }
    return result;
}

inline void to_json(nlohmann::json& j, const ReplicateRecord& r) {
    j = nlohmann::json{{"replicate", r.replicate}, {"failed", r.failed}};
    if (r.stopped)
        j["stop"] = r.stop_k;
    else
        j["stop"] = nullptr;
}

inline void from_json(const nlohmann::json& j, ReplicateRecord& r) {
    r.replicate = j.at("replicate").get<std::size_t>();
    r.failed = j.value("failed", false);
    r.stopped = j.contains("stop") && !j["stop"].is_null();
    r.stop_k = r.stopped ? j["stop"].get<std::size_t>() : 0;
}

inline void to_json(nlohmann::json& j, const ExperimentResult& r) {
    j = nlohmann::json{{"scenario", r.scenario_id},
                       {"method", r.method},
                       {"replicates", r.replicates},
                       {"failures", r.failures},
                       {"true_detections", r.true_detections},
                       {"false_alarms", r.false_alarms},
                       {"detection_rate", r.detection_rate},
                       {"false_alarm_rate", r.false_alarm_rate},
                       {"records", r.records}};
    if (!std::isnan(r.add)) j["add"] = r.add;
    if (!std::isnan(r.add_se)) j["add_se"] = r.add_se;
}

inline void from_json(const nlohmann::json& j, ExperimentResult& r) {
    r.scenario_id = j.at("scenario").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.replicates = j.at("replicates").get<std::size_t>();
    r.failures = j.value("failures", std::size_t{0});
    r.true_detections = j.at("true_detections").get<std::size_t>();
    r.false_alarms = j.at("false_alarms").get<std::size_t>();
    r.detection_rate = j.at("detection_rate").get<double>();
    r.false_alarm_rate = j.at("false_alarm_rate").get<double>();
    r.add = j.value("add", std::numeric_limits<double>::quiet_NaN());
    r.add_se = j.value("add_se", std::numeric_limits<double>::quiet_NaN());
    r.records = j.value("records", std::vector<ReplicateRecord>{});
    r.delays.clear();
}

/// Writes one summary row per cell, plus a JSON sidecar holding the run
/// settings and the full per-replicate stop records so every aggregate can
/// be recomputed from the file alone.
inline void export_results(const std::string& csv_path, const std::vector<ExperimentResult>& results,
                           const nlohmann::json& run_metadata) {
    CsvTable table;
    table.header = {"scenario", "method",         "replicates",      "failures",
                    "true_detections", "false_alarms", "detection_rate", "false_alarm_rate",
                    "add",      "add_se"};
    for (const auto& r : results) {
        table.rows.push_back({r.scenario_id, r.method, std::to_string(r.replicates),
                              std::to_string(r.failures), std::to_string(r.true_detections),
                              std::to_string(r.false_alarms), format_double(r.detection_rate),
                              format_double(r.false_alarm_rate),
                              std::isnan(r.add) ? "" : format_double(r.add),
                              std::isnan(r.add_se) ? "" : format_double(r.add_se)});
    }
    write_csv(csv_path, table);

    const nlohmann::json sidecar{{"metadata", run_metadata}, {"results", results}};
    std::ofstream out(csv_path + ".json");
    if (!out) throw std::runtime_error("cannot open '" + csv_path + ".json' for writing");
    out << sidecar.dump(2) << '\n';
    if (!out) throw std::runtime_error("write to '" + csv_path + ".json' failed");
}

inline void to_json(nlohmann::json& j, const ChangeSpec& c) {
    j = nlohmann::json{{"type", to_string(c.type)},
                       {"delta_mu", c.delta_mu},
                       {"beta", c.beta},
                       {"delta_xi", c.delta_xi},
                       {"phi_post", c.phi_post}};
}

inline void from_json(const nlohmann::json& j, ChangeSpec& c) {
    c.type = change_type_from_string(j.at("type").get<std::string>());
    c.delta_mu = j.value("delta_mu", 0.0);
    c.beta = j.value("beta", 0.0);
    c.delta_xi = j.value("delta_xi", 0.0);
    c.phi_post = j.value("phi_post", 0.0);
}

inline void to_json(nlohmann::json& j, const InnovationSpec& d) {
    j = nlohmann::json{{"dist", d.student_t ? "student-t" : "gaussian"}, {"df", d.df}};
}

inline void from_json(const nlohmann::json& j, InnovationSpec& d) {
    const std::string dist = j.value("dist", std::string("gaussian"));
    if (dist == "gaussian") {
        d.student_t = false;
    } else if (dist == "student-t") {
        d.student_t = true;
    } else {
        throw std::runtime_error("unknown innovation dist '" + dist + "'");
    }
    d.df = j.value("df", 5);
}

inline void to_json(nlohmann::json& j, const ScenarioSpec& s) {
    j = nlohmann::json{{"id", s.id},
                       {"noise", s.noise},
                       {"seasonal", to_string(s.seasonal)},
                       {"amplitude", s.amplitude},
                       {"quarterly_means", s.quarterly_means},
                       {"change", s.change},
                       {"m", s.m},
                       {"horizon", s.horizon},
                       {"k_star", s.k_star},
                       {"innovation", s.innovation}};
}

inline void from_json(const nlohmann::json& j, ScenarioSpec& s) {
    s.id = j.value("id", std::string("scenario"));
    s.noise = j.at("noise").get<ArmaSpec>();
    s.seasonal = seasonal_kind_from_string(j.value("seasonal", std::string("none")));
    s.amplitude = j.value("amplitude", 10.0);
    if (j.contains("quarterly_means"))
        s.quarterly_means = j["quarterly_means"].get<std::vector<double>>();
    if (j.contains("change")) s.change = j["change"].get<ChangeSpec>();
    s.m = j.at("m").get<std::size_t>();
    s.horizon = j.at("horizon").get<std::size_t>();
    s.k_star = j.value("k_star", std::size_t{0});
    if (j.contains("innovation")) s.innovation = j["innovation"].get<InnovationSpec>();
    s.validate();
}

inline void to_json(nlohmann::json& j, const MethodSpec& m) {
    j = nlohmann::json{{"family", to_string(m.family)},
                       {"detector", to_string(m.detector)},
                       {"max_p", m.max_p},
                       {"max_q", m.max_q},
                       {"seasonal_dummies", m.seasonal_dummies}};
}

inline void from_json(const nlohmann::json& j, MethodSpec& m) {
    m.family = method_family_from_string(j.at("family").get<std::string>());
    m.detector = detector_kind_from_string(j.value("detector", std::string("mean")));
    m.max_p = j.value("max_p", 3);
    m.max_q = j.value("max_q", 3);
    m.seasonal_dummies = j.value("seasonal_dummies", true);
    m.validate();
}

/// A complete simulation run: scenarios x methods at shared settings.
/// `workers` is an execution knob, deliberately kept out of the JSON form:
/// results are identical for any worker count, so serialized configs and
/// result sidecars stay byte-identical across machines.
struct RunConfig {
    std::vector<ScenarioSpec> scenarios;
    std::vector<MethodSpec> methods;
    std::size_t replicates = 200;
    std::uint64_t seed = 1;
    MonitorSettings settings;
    std::size_t workers = 1;
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{{"scenarios", c.scenarios},
                       {"methods", c.methods},
                       {"replicates", c.replicates},
                       {"seed", c.seed},
                       {"gamma", c.settings.gamma},
                       {"alpha", c.settings.alpha},
                       {"critical_value", c.settings.critical_value}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    c.scenarios = j.at("scenarios").get<std::vector<ScenarioSpec>>();
    c.methods = j.at("methods").get<std::vector<MethodSpec>>();
    c.replicates = j.value("replicates", std::size_t{200});
    c.seed = j.value("seed", std::uint64_t{1});
    c.settings.gamma = j.value("gamma", 0.0);
    c.settings.alpha = j.value("alpha", 0.05);
    c.settings.critical_value = j.value("critical_value", 0.0);
}

/// Runs every scenario x method cell of the configuration.
inline std::vector<ExperimentResult> run_experiment(const RunConfig& config) {
    std::vector<ExperimentResult> results;
    results.reserve(config.scenarios.size() * config.methods.size());
    for (const auto& scenario : config.scenarios)
        for (const auto& method : config.methods)
            results.push_back(run_cell(scenario, method, config.replicates, config.seed,
                                       config.settings, config.workers));
    return results;
}

}  // namespace femon
