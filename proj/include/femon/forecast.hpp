#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "femon/arma.hpp"
#include "femon/ets.hpp"
#include "femon/series.hpp"

namespace femon {

/// Forecasting backend selector.
enum class ModelChoice { arma, ets_ann, ets_aan, ets_ana };

inline std::string to_string(ModelChoice m) {
    switch (m) {
        case ModelChoice::arma: return "arma";
        case ModelChoice::ets_ann: return "ets-ann";
        case ModelChoice::ets_aan: return "ets-aan";
        case ModelChoice::ets_ana: return "ets-ana";
    }
    throw std::invalid_argument("unknown ModelChoice");
}

inline ModelChoice model_choice_from_string(const std::string& s) {
    if (s == "arma") return ModelChoice::arma;
    if (s == "ets-ann") return ModelChoice::ets_ann;
    if (s == "ets-aan") return ModelChoice::ets_aan;
    if (s == "ets-ana") return ModelChoice::ets_ana;
    throw std::invalid_argument("unknown model '" + s + "'");
}

/// A fitted forecaster of either family, with its fit diagnostics.
struct FitReport {
    std::variant<ArmaSpec, EtsSpec> model;
    double sse = 0.0;
    double aic = 0.0;
    std::size_t n = 0;
    bool converged = false;
};

/// Fits the chosen backend to a series (typically the training prefix).
inline FitReport fit_forecaster(const TimeSeries& series, ModelChoice choice,
                                const ArmaFitOptions& arma_options = {}) {
    FitReport report;
    if (choice == ModelChoice::arma) {
        const ArmaFitReport r = arma_fit(series, arma_options);
        report.model = r.spec;
        report.sse = r.sse;
        report.aic = r.aic;
        report.n = r.n;
        report.converged = r.converged;
        return report;
    }
    EtsStructure structure = EtsStructure::ann;
    if (choice == ModelChoice::ets_aan) structure = EtsStructure::aan;
    if (choice == ModelChoice::ets_ana) structure = EtsStructure::ana;
    const EtsFitReport r = ets_fit(series, structure);
    report.model = r.spec;
    report.sse = r.sse;
    report.aic = r.aic;
    report.n = r.n;
    report.converged = r.converged;
    return report;
}

/// One-step forecast errors over the whole series from a frozen model,
/// starting at index 1 (so the training block holds in-sample residuals
/// and the monitoring block holds genuine one-step-ahead errors).
inline ErrorStream generate_error_stream(const TimeSeries& series,
                                         const std::variant<ArmaSpec, EtsSpec>& model,
                                         const SplitSpec& split) {
    series.validate();
    ErrorStream stream;
    stream.m = split.resolve(series.size());
    stream.origin = StreamOrigin::model_forecast;
    stream.errors.reserve(series.size());

    if (std::holds_alternative<ArmaSpec>(model)) {
        ArmaForecaster forecaster(std::get<ArmaSpec>(model));
        for (double y : series.values) stream.errors.push_back(forecaster.observe(y));
    } else {
        EtsForecaster forecaster(std::get<EtsSpec>(model));
        for (double y : series.values) stream.errors.push_back(forecaster.observe(y));
    }
    stream.validate();
    return stream;
}

inline ErrorStream generate_error_stream(const TimeSeries& series, const FitReport& report,
                                         const SplitSpec& split) {
    return generate_error_stream(series, report.model, split);
}

inline void to_json(nlohmann::json& j, const FitReport& report) {
    if (std::holds_alternative<ArmaSpec>(report.model)) {
        j["model"] = std::get<ArmaSpec>(report.model);
    } else {
        j["model"] = std::get<EtsSpec>(report.model);
    }
    j["sse"] = report.sse;
    j["aic"] = report.aic;
    j["n"] = report.n;
    j["converged"] = report.converged;
}

inline void from_json(const nlohmann::json& j, FitReport& report) {
    const auto& jm = j.at("model");
    const std::string type = jm.at("type").get<std::string>();
    if (type == "arma") {
        report.model = jm.get<ArmaSpec>();
    } else if (type == "ets") {
        report.model = jm.get<EtsSpec>();
    } else {
        throw std::runtime_error("unknown model type '" + type + "'");
    }
    report.sse = j.at("sse").get<double>();
    report.aic = j.at("aic").get<double>();
    report.n = j.at("n").get<std::size_t>();
    report.converged = j.at("converged").get<bool>();
}

inline void save_fit_report(const std::string& path, const FitReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    nlohmann::json j = report;
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline FitReport load_fit_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("invalid fit report '" + path + "': " + e.what());
    }
    return j.get<FitReport>();
}

}  // namespace femon
