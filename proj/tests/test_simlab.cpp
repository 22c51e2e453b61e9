#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "femon/simlab.hpp"
#include "test_util.hpp"

using namespace femon;

namespace {

ScenarioSpec base_scenario() {
    ScenarioSpec spec;
    spec.id = "test";
    spec.noise.phi = {0.5};
    spec.noise.sigma2 = 1.0;
    spec.m = 100;
    spec.horizon = 200;
    spec.k_star = 50;
    spec.change.type = ChangeType::mean_shift;
    spec.change.delta_mu = 5.0;
    return spec;
}

ScenarioSpec quiet(ScenarioSpec spec) {
    spec.noise.phi.clear();
    spec.noise.sigma2 = 1e-12;
    return spec;
}

}  // namespace

TEST_CASE("scenario generation is deterministic per replicate") {
    const ScenarioSpec spec = base_scenario();
    const TimeSeries a = generate_scenario(spec, 42, 7);
    const TimeSeries b = generate_scenario(spec, 42, 7);
    const TimeSeries c = generate_scenario(spec, 42, 8);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.size() == spec.length());
    CHECK(a.frequency == 1);
}

TEST_CASE("seasonal paths have the documented shapes") {
    ScenarioSpec spec = quiet(base_scenario());
    spec.change.type = ChangeType::none;

    SECTION("sine12") {
        spec.seasonal = SeasonalKind::sine12;
        const TimeSeries ts = generate_scenario(spec, 1);
        CHECK(ts.frequency == 12);
        for (std::size_t t = 1; t <= 24; ++t) {
            const double expected =
                10.0 * std::sin(std::numbers::pi * static_cast<double>((t - 1) % 12) / 11.0);
            CHECK_THAT(ts.values[t - 1], Catch::Matchers::WithinAbs(expected, 1e-4));
        }
    }

    SECTION("cos7") {
        spec.seasonal = SeasonalKind::cos7;
        const TimeSeries ts = generate_scenario(spec, 1);
        CHECK(ts.frequency == 7);
        for (std::size_t t = 1; t <= 14; ++t) {
            const double expected =
                10.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>((t - 1) % 7) / 6.0);
            CHECK_THAT(ts.values[t - 1], Catch::Matchers::WithinAbs(expected, 1e-4));
        }
    }

    SECTION("quarterly") {
        spec.seasonal = SeasonalKind::quarterly;
        const TimeSeries ts = generate_scenario(spec, 1);
        CHECK(ts.frequency == 4);
        const std::vector<double> means{-2.0, 5.0, 7.0, -10.0};
        for (std::size_t t = 1; t <= 12; ++t)
            CHECK_THAT(ts.values[t - 1],
                       Catch::Matchers::WithinAbs(means[(t - 1) % 4], 1e-4));
    }
}

TEST_CASE("changes take effect exactly after the changepoint") {
    SECTION("mean shift") {
        const ScenarioSpec spec = quiet(base_scenario());
        const TimeSeries ts = generate_scenario(spec, 3);
        const std::size_t cp = spec.change_index();
        CHECK_THAT(ts.values[cp - 1], Catch::Matchers::WithinAbs(0.0, 1e-4));
        CHECK_THAT(ts.values[cp], Catch::Matchers::WithinAbs(5.0, 1e-4));
        CHECK_THAT(ts.values.back(), Catch::Matchers::WithinAbs(5.0, 1e-4));
    }

    SECTION("trend onset uses the global time index") {
        ScenarioSpec spec = quiet(base_scenario());
        spec.change.type = ChangeType::trend_onset;
        spec.change.beta = 0.1;
        const TimeSeries ts = generate_scenario(spec, 3);
        const std::size_t cp = spec.change_index();
        CHECK_THAT(ts.values[cp - 1], Catch::Matchers::WithinAbs(0.0, 1e-4));
        CHECK_THAT(ts.values[cp],
                   Catch::Matchers::WithinAbs(0.1 * static_cast<double>(cp + 1), 1e-4));
        CHECK_THAT(ts.values.back(),
                   Catch::Matchers::WithinAbs(0.1 * static_cast<double>(spec.length()), 1e-4));
    }
}

TEST_CASE("variance shift raises the innovation variance additively") {
    ScenarioSpec spec = base_scenario();
    spec.noise.phi.clear();  // white noise: observation variance = sigma2
    spec.change.type = ChangeType::variance_shift;
    spec.change.delta_xi = 3.0;
    spec.m = 100;
    spec.horizon = 4100;
    spec.k_star = 100;

    const TimeSeries ts = generate_scenario(spec, 11);
    const std::size_t cp = spec.change_index();
    std::vector<double> pre(ts.values.begin(), ts.values.begin() + cp);
    std::vector<double> post(ts.values.begin() + cp, ts.values.end());
    CHECK_THAT(variance(pre), Catch::Matchers::WithinAbs(1.0, 0.35));
    CHECK_THAT(variance(post), Catch::Matchers::WithinAbs(4.0, 0.5));
}

TEST_CASE("ar switch changes the serial correlation") {
    ScenarioSpec spec = base_scenario();
    spec.noise.phi = {0.2};
    spec.change.type = ChangeType::ar_switch;
    spec.change.phi_post = 0.9;
    spec.m = 200;
    spec.horizon = 3200;
    spec.k_star = 200;

    const TimeSeries ts = generate_scenario(spec, 19);
    const std::size_t cp = spec.change_index();
    std::vector<double> pre(ts.values.begin(), ts.values.begin() + cp);
    std::vector<double> post(ts.values.begin() + cp + 200, ts.values.end());
    CHECK_THAT(autocorrelation(pre, 1), Catch::Matchers::WithinAbs(0.2, 0.12));
    CHECK_THAT(autocorrelation(post, 1), Catch::Matchers::WithinAbs(0.9, 0.05));
}

TEST_CASE("burn-in starts the recursion at stationarity") {
    ScenarioSpec spec = base_scenario();
    spec.noise.phi = {0.9};
    spec.change.type = ChangeType::none;
    spec.m = 10;
    spec.horizon = 10;
    spec.k_star = 0;

    // Across replicates, the first observation should already have the
    // stationary variance 1 / (1 - 0.81) ~= 5.26 rather than ~1.
    std::vector<double> first;
    for (std::uint64_t rep = 0; rep < 300; ++rep)
        first.push_back(generate_scenario(spec, 23, rep).values.front());
    CHECK(variance(first) > 3.5);
    CHECK(variance(first) < 7.5);
}

TEST_CASE("scenario validation rejects inconsistent specs") {
    ScenarioSpec spec = base_scenario();
    spec.k_star = spec.horizon;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

    spec = base_scenario();
    spec.change.type = ChangeType::ar_switch;
    spec.noise.phi = {0.5, 0.1};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

    spec = base_scenario();
    spec.change.type = ChangeType::variance_shift;
    spec.change.delta_xi = -2.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

    spec = base_scenario();
    spec.seasonal = SeasonalKind::quarterly;
    spec.quarterly_means = {1.0, 2.0};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

    spec = base_scenario();
    spec.noise.regressors = SeasonalDummies{4, {1.0, -1.0, 1.0, -1.0}, false, 0.0};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("scenario and run config json round trip") {
    femon::testing::TempDir dir;
    ScenarioSpec spec = base_scenario();
    spec.seasonal = SeasonalKind::quarterly;
    spec.innovation.student_t = true;
    spec.innovation.df = 7;

    nlohmann::json j = spec;
    const ScenarioSpec back = j.get<ScenarioSpec>();
    CHECK(back.id == spec.id);
    CHECK(back.noise.phi == spec.noise.phi);
    CHECK(back.seasonal == SeasonalKind::quarterly);
    CHECK(back.change.delta_mu == 5.0);
    CHECK(back.innovation.student_t);
    CHECK(back.innovation.df == 7);

    RunConfig config;
    config.scenarios = {spec};
    config.methods = {MethodSpec{MethodFamily::raw_cusum, DetectorKind::mean},
                      MethodSpec{MethodFamily::arma_forecast_errors, DetectorKind::variance}};
    config.replicates = 17;
    config.seed = 99;
    config.settings.alpha = 0.01;
    nlohmann::json cj = config;
    const RunConfig cback = cj.get<RunConfig>();
    CHECK(cback.replicates == 17);
    CHECK(cback.methods.size() == 2);
    CHECK(cback.methods[1].family == MethodFamily::arma_forecast_errors);
    CHECK(cback.methods[1].detector == DetectorKind::variance);
    CHECK(cback.settings.alpha == 0.01);
}

TEST_CASE("method labels and validation") {
    MethodSpec method;
    method.family = MethodFamily::raw_cusum;
    method.detector = DetectorKind::mean;
    CHECK(method.label() == "raw-cusum/mean");
    method.detector = DetectorKind::raw_mean;
    CHECK_THROWS_AS(method.validate(), std::invalid_argument);
}

TEST_CASE("run cell detects a large mean shift with both families") {
    ScenarioSpec spec = base_scenario();
    MonitorSettings settings;  // defaults: gamma 0, alpha 0.05, cached constant

    for (MethodFamily family :
         {MethodFamily::raw_cusum, MethodFamily::arma_forecast_errors}) {
        MethodSpec method;
        method.family = family;
        method.detector = DetectorKind::mean;
        method.max_p = 1;
        method.max_q = 1;
        const ExperimentResult result = run_cell(spec, method, 40, 2024, settings);
        INFO(result.method);
        CHECK(result.failures == 0);
        CHECK(result.detection_rate >= 0.9);
        CHECK(result.false_alarm_rate <= 0.15);
        REQUIRE_FALSE(result.delays.empty());
        CHECK(result.add >= 1.0);
        CHECK(result.delays.size() == result.true_detections);
    }
}

TEST_CASE("run cell results are reproducible and worker independent") {
    const ScenarioSpec spec = base_scenario();
    MethodSpec method;
    method.family = MethodFamily::arma_forecast_errors;
    method.detector = DetectorKind::mean;
    method.max_p = 1;
    method.max_q = 0;
    MonitorSettings settings;

    const ExperimentResult a = run_cell(spec, method, 24, 7, settings, 1);
    const ExperimentResult b = run_cell(spec, method, 24, 7, settings, 1);
    const ExperimentResult c = run_cell(spec, method, 24, 7, settings, 3);
    CHECK(a.detection_rate == b.detection_rate);
    CHECK(a.delays == b.delays);
    CHECK(a.detection_rate == c.detection_rate);
    CHECK(a.delays == c.delays);
    CHECK(a.false_alarm_rate == c.false_alarm_rate);
}

TEST_CASE("null scenarios report the false-alarm rate as the stop rate") {
    ScenarioSpec spec = base_scenario();
    spec.change = ChangeSpec{};
    spec.horizon = 300;
    MethodSpec method;
    method.family = MethodFamily::raw_cusum;
    method.detector = DetectorKind::mean;
    MonitorSettings settings;

    const ExperimentResult result = run_cell(spec, method, 60, 5, settings);
    CHECK(result.true_detections == 0);
    CHECK(result.detection_rate == result.false_alarm_rate);
    CHECK(std::isnan(result.add));
    CHECK(result.false_alarm_rate <= 0.15);
    CHECK(result.records.size() == 60);
}

TEST_CASE("ets family handles a seasonal mean shift") {
    ScenarioSpec spec = base_scenario();
    spec.seasonal = SeasonalKind::quarterly;
    spec.noise.phi = {0.3};
    spec.m = 120;
    spec.horizon = 200;
    spec.k_star = 40;
    MethodSpec method;
    method.family = MethodFamily::ets_forecast_errors;
    method.detector = DetectorKind::mean;
    MonitorSettings settings;

    const ExperimentResult result = run_cell(spec, method, 30, 31, settings);
    CHECK(result.failures == 0);
    CHECK(result.detection_rate >= 0.5);
}

TEST_CASE("experiment export writes a summary row per cell") {
    femon::testing::TempDir dir;
    ScenarioSpec spec = base_scenario();
    spec.horizon = 120;
    RunConfig config;
    config.scenarios = {spec};
    config.methods = {MethodSpec{MethodFamily::raw_cusum, DetectorKind::mean},
                      MethodSpec{MethodFamily::arma_forecast_errors, DetectorKind::mean, 1, 0}};
    config.replicates = 10;
    config.seed = 12;

    const auto results = run_experiment(config);
    REQUIRE(results.size() == 2);
    const std::string csv_path = dir.file("results.csv");
    nlohmann::json meta = config;
    export_results(csv_path, results, meta);

    const CsvTable table = read_csv(csv_path);
    CHECK(table.rows.size() == 2);
    CHECK(table.header.front() == "scenario");

    std::ifstream sidecar(csv_path + ".json");
    REQUIRE(sidecar.good());
    nlohmann::json parsed;
    sidecar >> parsed;
    CHECK(parsed.at("metadata").at("replicates").get<int>() == 10);
    REQUIRE(parsed.at("results").size() == 2);

    // Aggregates must be recomputable from the per-replicate records alone.
    for (std::size_t i = 0; i < results.size(); ++i) {
        const ExperimentResult reloaded = parsed["results"][i].get<ExperimentResult>();
        REQUIRE(reloaded.records.size() == 10);
        std::size_t failures = 0, trues = 0, falses = 0;
        double delay_sum = 0.0;
        for (const ReplicateRecord& rec : reloaded.records) {
            if (rec.failed) {
                ++failures;
            } else if (rec.stopped) {
                if (rec.stop_k > spec.k_star) {
                    ++trues;
                    delay_sum += static_cast<double>(rec.stop_k - spec.k_star);
                } else {
                    ++falses;
                }
            }
        }
        const auto effective = static_cast<double>(10 - failures);
        CHECK(failures == results[i].failures);
        CHECK(trues == results[i].true_detections);
        CHECK(falses == results[i].false_alarms);
        CHECK_THAT(reloaded.detection_rate,
                   Catch::Matchers::WithinAbs(static_cast<double>(trues + falses) / effective,
                                              1e-12));
        if (trues > 0)
            CHECK_THAT(delay_sum / static_cast<double>(trues),
                       Catch::Matchers::WithinAbs(results[i].add, 1e-9));
    }
}
