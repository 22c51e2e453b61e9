// Command line front end for the forecast-error monitoring toolkit.
//
// Subcommands:
//   calibrate  simulate critical constants and write them as a JSON table
//   fit        fit a forecasting model to a CSV series
//   monitor    run a CUSUM detector over forecast errors or raw values
//   simulate   run scenario x method experiments and export summary tables
//
// Exit codes: 0 = success / no alarm, 2 = monitor raised an alarm,
// 1 = any error.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "femon/femon.hpp"

namespace {

using namespace femon;

double resolve_critical(double explicit_value, const std::string& table_path, double gamma,
                        double alpha) {
    if (explicit_value > 0.0) return explicit_value;
    const CriticalTable table =
        table_path.empty() ? CriticalTable::defaults() : CriticalTable::load(table_path);
    const auto c = table.lookup(gamma, alpha);
    if (!c)
        throw std::runtime_error(
            "no critical value for gamma=" + std::to_string(gamma) + ", alpha=" +
            std::to_string(alpha) +
            " in the table; run `femon calibrate` for this pair or pass --critical");
    return *c;
}

SplitSpec make_split(std::size_t m, double train_frac) {
    if (m > 0 && train_frac > 0.0)
        throw std::runtime_error("pass either --m or --train-frac, not both");
    if (m > 0) return SplitSpec::count(m);
    if (train_frac > 0.0) return SplitSpec::fraction(train_frac);
    return SplitSpec::fraction(0.75);
}

int cmd_calibrate(const std::vector<double>& gammas, const std::vector<double>& alphas,
                  std::size_t replicates, std::size_t grid, std::uint64_t seed,
                  std::size_t workers, const std::string& output) {
    MonteCarloConfig config;
    config.replicates = replicates;
    config.grid = grid;
    config.seed = seed;
    config.workers = workers;
    const CriticalTable table = critical_values(gammas, alphas, config);
    table.save(output);
    for (const auto& e : table.entries)
        std::cout << "gamma=" << e.gamma << " alpha=" << e.alpha << " c=" << format_double(e.value)
                  << '\n';
    std::cout << "wrote " << output << '\n';
    return 0;
}

struct FitArgs {
    std::string input, column = "value", timestamp_column, model = "arma", output;
    std::string errors_output = "errors.csv";
    int frequency = 1;
    int max_p = 3, max_q = 3;
    bool seasonal_dummies = false, trend = false, seasonal_ar = false;
    std::size_t m = 0;
    double train_frac = 0.0;
};

FitReport fit_training_prefix(const FitArgs& args, const TimeSeries& series,
                              const SplitSpec& split) {
    ArmaFitOptions options;
    options.max_p = args.max_p;
    options.max_q = args.max_q;
    options.seasonal_dummies = args.seasonal_dummies;
    options.trend = args.trend;
    options.seasonal_ar = args.seasonal_ar;
    const TimeSeries training = series.prefix(split.resolve(series.size()));
    return fit_forecaster(training, model_choice_from_string(args.model), options);
}

void print_fit_summary(const FitReport& report) {
    if (std::holds_alternative<ArmaSpec>(report.model)) {
        const auto& spec = std::get<ArmaSpec>(report.model);
        std::cout << "fitted arma(" << spec.p() << "," << spec.q() << ")";
        if (spec.seasonal_ar) std::cout << " x (1)[" << spec.seasonal_ar->period << "]";
        if (spec.regressors && spec.regressors->period > 1)
            std::cout << " + seasonal dummies[" << spec.regressors->period << "]";
        if (spec.regressors && spec.regressors->trend) std::cout << " + trend";
    } else {
        const auto& spec = std::get<EtsSpec>(report.model);
        std::cout << "fitted ets(" << to_string(spec.structure) << ")";
        if (spec.structure == EtsStructure::ana) std::cout << "[" << spec.period << "]";
    }
    std::cout << " aic=" << report.aic << " sse=" << report.sse << " n=" << report.n
              << (report.converged ? "" : " (optimizer did not converge)") << '\n';
}

int cmd_fit(const FitArgs& args) {
    const TimeSeries series =
        load_series(args.input, args.column, args.frequency, args.timestamp_column);
    const SplitSpec split = make_split(args.m, args.train_frac);
    const FitReport report = fit_training_prefix(args, series, split);
    save_fit_report(args.output, report);
    const ErrorStream stream = generate_error_stream(series, report, split);
    write_errors_csv(args.errors_output, stream);
    print_fit_summary(report);
    std::cout << "training length m=" << stream.m << " of " << series.size()
              << " observations\n";
    std::cout << "wrote " << args.output << " and " << args.errors_output << '\n';
    return 0;
}

struct MonitorArgs {
    std::string input, column = "value", timestamp_column;
    int frequency = 1;
    bool errors_input = false;
    std::string model_file, model = "arma", save_model;
    int max_p = 3, max_q = 3;
    bool seasonal_dummies = false, trend = false, seasonal_ar = false;
    std::size_t m = 0;
    double train_frac = 0.0;
    std::string kind = "mean";
    double gamma = 0.0, alpha = 0.05, critical = 0.0;
    std::string table_path, output;
};

int cmd_monitor(const MonitorArgs& args) {
    const double c = resolve_critical(args.critical, args.table_path, args.gamma, args.alpha);
    const SplitSpec split = make_split(args.m, args.train_frac);

    std::vector<DetectorKind> kinds;
    if (args.kind == "both") {
        kinds = {DetectorKind::mean, DetectorKind::variance};
    } else {
        kinds = {detector_kind_from_string(args.kind)};
    }
    const bool raw = is_raw_kind(kinds.front());
    if (raw && kinds.size() > 1)
        throw std::runtime_error("--kind both applies to forecast-error monitoring only");
    if (raw && !args.model_file.empty())
        throw std::runtime_error("raw kinds monitor the observations; --model does not apply");

    ErrorStream stream;
    std::vector<std::string> timestamps;
    if (raw || args.errors_input) {
        const std::string column = args.errors_input && args.column == "value" ? "error"
                                                                               : args.column;
        bool recovered = false;
        if (args.errors_input && args.m == 0 && args.train_frac == 0.0 && column == "error") {
            // No split given: recover it from the phase column `fit` writes.
            const CsvTable probe = read_csv(args.input);
            const bool has_phase =
                std::find(probe.header.begin(), probe.header.end(), "phase") !=
                probe.header.end();
            if (has_phase) {
                stream = read_errors_csv(args.input);
                recovered = true;
                std::cout << "recovered training length m=" << stream.m
                          << " from the phase column\n";
            }
        }
        if (!recovered) {
            const TimeSeries values =
                load_series(args.input, column, args.frequency, args.timestamp_column);
            stream = split_errors(values.values, split);
            timestamps = values.timestamps;
        }
    } else {
        const TimeSeries series =
            load_series(args.input, args.column, args.frequency, args.timestamp_column);
        timestamps = series.timestamps;
        FitReport report;
        if (!args.model_file.empty()) {
            report = load_fit_report(args.model_file);
        } else {
            FitArgs fit_args;
            fit_args.model = args.model;
            fit_args.max_p = args.max_p;
            fit_args.max_q = args.max_q;
            fit_args.seasonal_dummies = args.seasonal_dummies;
            fit_args.trend = args.trend;
            fit_args.seasonal_ar = args.seasonal_ar;
            report = fit_training_prefix(fit_args, series, split);
            print_fit_summary(report);
        }
        if (!args.save_model.empty()) save_fit_report(args.save_model, report);
        stream = generate_error_stream(series, report, split);
    }

    bool any_alarm = false;
    CsvTable log;
    log.header = {"kind", "k", "detector", "threshold", "alarm"};
    for (DetectorKind kind : kinds) {
        MonitorConfig config;
        config.kind = kind;
        config.gamma = args.gamma;
        config.alpha = args.alpha;
        config.critical_value = c;
        config.scale = is_raw_kind(kind) ? ScaleEstimator::bartlett_lrv : ScaleEstimator::iid_sd;

        const MonitorResult result = run_monitor(stream, config);
        const DetectorState state = init_detector(stream, config);
        const std::string label = to_string(kind);
        std::cout << label << ": m=" << stream.m << " sigma_hat="
                  << format_double(state.sigma_hat) << " critical=" << format_double(c)
                  << " gamma=" << args.gamma << '\n';
        if (result.alarm_index) {
            any_alarm = true;
            const std::size_t observation = stream.m + *result.alarm_index;
            std::cout << label << ": alarm at monitoring step k=" << *result.alarm_index
                      << " (observation " << observation;
            if (observation <= timestamps.size() && !timestamps.empty())
                std::cout << ", " << timestamps[observation - 1];
            std::cout << ")\n";
        } else {
            std::cout << label << ": no alarm in " << result.steps.size()
                      << " monitoring steps\n";
        }
        for (const auto& s : result.steps)
            log.rows.push_back({label, std::to_string(s.k), format_double(s.detector),
                                format_double(s.threshold), s.alarm ? "1" : "0"});
    }
    if (!args.output.empty()) {
        write_csv(args.output, log);
        std::cout << "wrote " << args.output << '\n';
    }
    return any_alarm ? 2 : 0;
}

struct SimulateArgs {
    std::string scenario_file, config_file;
    std::vector<std::string> methods{"raw-cusum", "arma-forecast-errors"};
    std::string detector = "mean";
    std::size_t replicates = 200;
    std::uint64_t seed = 1;
    double gamma = 0.0, alpha = 0.05, critical = 0.0;
    std::string table_path;
    std::size_t workers = 1;
    std::string output = "results.csv";
};

int cmd_simulate(const SimulateArgs& args) {
    RunConfig config;
    if (!args.config_file.empty()) {
        std::ifstream in(args.config_file);
        if (!in) throw std::runtime_error("cannot open '" + args.config_file + "' for reading");
        nlohmann::json j;
        in >> j;
        config = j.get<RunConfig>();
    } else {
        if (args.scenario_file.empty())
            throw std::runtime_error("pass --scenario or --config");
        std::ifstream in(args.scenario_file);
        if (!in) throw std::runtime_error("cannot open '" + args.scenario_file + "' for reading");
        nlohmann::json j;
        in >> j;
        if (j.is_array()) {
            config.scenarios = j.get<std::vector<ScenarioSpec>>();
        } else {
            config.scenarios = {j.get<ScenarioSpec>()};
        }

        std::vector<DetectorKind> detectors;
        if (args.detector == "both") {
            detectors = {DetectorKind::mean, DetectorKind::variance};
        } else {
            detectors = {detector_kind_from_string(args.detector)};
        }
        for (const auto& name : args.methods) {
            for (DetectorKind detector : detectors) {
                MethodSpec method;
                method.family = method_family_from_string(name);
                method.detector = detector;
                config.methods.push_back(method);
            }
        }
        config.replicates = args.replicates;
        config.seed = args.seed;
        config.settings.gamma = args.gamma;
        config.settings.alpha = args.alpha;
        config.settings.critical_value = args.critical;
    }
    config.workers = args.workers;
    config.settings.critical_value =
        resolve_critical(config.settings.critical_value, args.table_path, config.settings.gamma,
                         config.settings.alpha);

    const std::vector<ExperimentResult> results = run_experiment(config);
    nlohmann::json meta = config;
    export_results(args.output, results, meta);

    for (const auto& r : results) {
        std::cout << r.scenario_id << " " << r.method << ": dp=" << r.detection_rate
                  << " fdp=" << r.false_alarm_rate;
        if (!std::isnan(r.add)) std::cout << " add=" << r.add << " (se " << r.add_se << ")";
        if (r.failures > 0) std::cout << " failures=" << r.failures;
        std::cout << '\n';
    }
    std::cout << "wrote " << args.output << " and " << args.output << ".json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential monitoring of forecast errors for model inadequacy"};
    app.require_subcommand(1);

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "simulate critical constants");
    std::vector<double> gammas{0.0, 0.25, 0.45};
    std::vector<double> alphas{0.01, 0.05, 0.10};
    std::size_t replicates = 200000, grid = 20000, cal_workers = 1;
    std::uint64_t cal_seed = 20240817;
    std::string cal_output = "critical_values.json";
    calibrate->add_option("--gamma", gammas, "boundary weight exponents")->delimiter(',');
    calibrate->add_option("--alpha", alphas, "significance levels")->delimiter(',');
    calibrate->add_option("--replicates", replicates, "number of simulated paths");
    calibrate->add_option("--grid", grid, "grid points per path");
    calibrate->add_option("--seed", cal_seed, "simulation seed");
    calibrate->add_option("--workers", cal_workers, "worker threads (0 = all cores)");
    calibrate->add_option("--output", cal_output, "output JSON table")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "fit a forecasting model to a CSV series");
    FitArgs fit_args;
    fit->add_option("--input", fit_args.input, "input CSV file")->required();
    fit->add_option("--column", fit_args.column, "value column name");
    fit->add_option("--timestamp-column", fit_args.timestamp_column, "timestamp column name");
    fit->add_option("--frequency", fit_args.frequency, "seasonal period of the series");
    fit->add_option("--model", fit_args.model, "arma | ets-ann | ets-aan | ets-ana");
    fit->add_option("--max-p", fit_args.max_p, "largest AR order in the search grid");
    fit->add_option("--max-q", fit_args.max_q, "largest MA order in the search grid");
    fit->add_flag("--seasonal-dummies", fit_args.seasonal_dummies,
                  "regression seasonal dummies (arma)");
    fit->add_flag("--trend", fit_args.trend, "regression linear trend (arma)");
    fit->add_flag("--seasonal-ar", fit_args.seasonal_ar, "multiplicative seasonal AR (arma)");
    fit->add_option("--m", fit_args.m, "training length");
    fit->add_option("--train-frac", fit_args.train_frac, "training fraction (default 0.75)");
    fit->add_option("--output", fit_args.output, "output model JSON")->required();
    fit->add_option("--errors-output", fit_args.errors_output,
                    "full one-step error stream CSV (default errors.csv)");

    // monitor
    auto* monitor = app.add_subcommand("monitor", "run a CUSUM detector over a series");
    MonitorArgs mon;
    monitor->add_option("--input", mon.input, "input CSV file")->required();
    monitor->add_option("--column", mon.column, "value column name");
    monitor->add_option("--timestamp-column", mon.timestamp_column, "timestamp column name");
    monitor->add_option("--frequency", mon.frequency, "seasonal period of the series");
    monitor->add_flag("--errors", mon.errors_input,
                      "input already holds forecast errors (column 'error' by default)");
    monitor->add_option("--model-file", mon.model_file, "frozen model JSON from `fit`");
    monitor->add_option("--model", mon.model, "model to fit when no --model-file is given");
    monitor->add_option("--max-p", mon.max_p, "largest AR order in the search grid");
    monitor->add_option("--max-q", mon.max_q, "largest MA order in the search grid");
    monitor->add_flag("--seasonal-dummies", mon.seasonal_dummies,
                      "regression seasonal dummies (arma)");
    monitor->add_flag("--trend", mon.trend, "regression linear trend (arma)");
    monitor->add_flag("--seasonal-ar", mon.seasonal_ar, "multiplicative seasonal AR (arma)");
    monitor->add_option("--m", mon.m, "training length");
    monitor->add_option("--train-frac", mon.train_frac, "training fraction (default 0.75)");
    monitor->add_option("--kind", mon.kind, "mean | variance | both | raw-mean | raw-variance");
    monitor->add_option("--gamma", mon.gamma, "boundary weight exponent");
    monitor->add_option("--alpha", mon.alpha, "significance level");
    monitor->add_option("--critical", mon.critical, "explicit critical constant");
    monitor->add_option("--table", mon.table_path, "critical value table JSON");
    monitor->add_option("--save-model", mon.save_model, "write the fitted model JSON here");
    monitor->add_option("--output", mon.output, "step log CSV");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run scenario x method experiments");
    SimulateArgs sim;
    simulate->add_option("--scenario", sim.scenario_file, "scenario JSON (object or array)");
    simulate->add_option("--config", sim.config_file, "full run configuration JSON");
    simulate->add_option("--methods", sim.methods, "raw-cusum | arma-forecast-errors | "
                                                   "ets-forecast-errors")
        ->delimiter(',');
    simulate->add_option("--detector", sim.detector, "mean | variance | both");
    simulate->add_option("--replicates", sim.replicates, "replicates per cell");
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--gamma", sim.gamma, "boundary weight exponent");
    simulate->add_option("--alpha", sim.alpha, "significance level");
    simulate->add_option("--critical", sim.critical, "explicit critical constant");
    simulate->add_option("--table", sim.table_path, "critical value table JSON");
    simulate->add_option("--workers", sim.workers, "worker threads (0 = all cores)");
    simulate->add_option("--output", sim.output, "results CSV path");

    try {
        app.parse(argc, argv);
        if (calibrate->parsed())
            return cmd_calibrate(gammas, alphas, replicates, grid, cal_seed, cal_workers,
                                 cal_output);
        if (fit->parsed()) return cmd_fit(fit_args);
        if (monitor->parsed()) return cmd_monitor(mon);
        if (simulate->parsed()) return cmd_simulate(sim);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
