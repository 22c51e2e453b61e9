#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "femon/csv.hpp"
#include "femon/linreg.hpp"
#include "femon/optim.hpp"
#include "femon/rng.hpp"
#include "femon/series.hpp"
#include "femon/stats.hpp"
#include "test_util.hpp"

using namespace femon;

TEST_CASE("splitmix64 matches the reference sequence") {
    std::uint64_t state = 0;
    CHECK(splitmix64(state) == 0xE220A8397B1DCDAFULL);
    CHECK(splitmix64(state) == 0x6E789E6AA1B965F4ULL);
    CHECK(splitmix64(state) == 0x06C45D188009454FULL);
}

TEST_CASE("rng streams are deterministic and decorrelated") {
    Rng a(42, 0), b(42, 0), c(42, 1);
    bool all_equal = true, any_equal_cross = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        all_equal = all_equal && (x == b.next_u64());
        any_equal_cross = any_equal_cross || (x == c.next_u64());
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_cross);
}

TEST_CASE("rng uniform01 lies in [0,1) with mean near one half") {
    Rng rng(7);
    double sum = 0.0;
    bool in_range = true;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        in_range = in_range && u >= 0.0 && u < 1.0;
        sum += u;
    }
    CHECK(in_range);
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(0.5, 0.005));
}

TEST_CASE("rng normal has unit variance and zero mean") {
    Rng rng(11);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    const double m = sum / n;
    CHECK_THAT(m, Catch::Matchers::WithinAbs(0.0, 0.01));
    CHECK_THAT(sumsq / n - m * m, Catch::Matchers::WithinAbs(1.0, 0.02));
}

TEST_CASE("rng student_t is standardized with heavy tails") {
    Rng rng(13);
    const int n = 200000;
    double sumsq = 0.0, sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.student_t(5);
        sumsq += z * z;
        sum4 += z * z * z * z;
    }
    const double var = sumsq / n;
    CHECK_THAT(var, Catch::Matchers::WithinAbs(1.0, 0.05));
    CHECK(sum4 / n / (var * var) > 4.0);  // excess kurtosis of t(5)
    CHECK_THROWS_AS(rng.student_t(2), std::invalid_argument);
}

TEST_CASE("moment helpers match hand-computed values") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    CHECK(mean(x) == 2.5);
    CHECK(variance(x) == 1.25);
    CHECK_THAT(sample_variance(x), Catch::Matchers::WithinAbs(5.0 / 3.0, 1e-15));
    CHECK_THAT(autocovariance(x, 1), Catch::Matchers::WithinAbs(0.3125, 1e-15));
    CHECK_THROWS_AS(mean(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(sample_variance(std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(autocovariance(x, 4), std::invalid_argument);
}

TEST_CASE("quantile uses the ceil(p*n) order statistic") {
    std::vector<double> x;
    for (int i = 1; i <= 100; ++i) x.push_back(i);
    CHECK(quantile(x, 0.95) == 95.0);
    CHECK(quantile(x, 0.941) == 95.0);
    CHECK(quantile(x, 1.0) == 100.0);
    CHECK(quantile(x, 0.005) == 1.0);
    CHECK_THROWS_AS(quantile(x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), std::invalid_argument);
}

TEST_CASE("ljung box statistic matches a direct computation") {
    const std::vector<double> x{1.0, -2.0, 1.5, 0.5, -1.0, 2.0, -0.5, 0.25};
    const auto n = static_cast<double>(x.size());
    double expected = 0.0;
    for (std::size_t k = 1; k <= 3; ++k) {
        const double rk = autocovariance(x, k) / autocovariance(x, 0);
        expected += rk * rk / (n - k);
    }
    expected *= n * (n + 2.0);
    CHECK_THAT(ljung_box(x, 3), Catch::Matchers::WithinAbs(expected, 1e-12));

    Rng rng(3);
    std::vector<double> noise(500);
    for (double& v : noise) v = rng.normal();
    CHECK(ljung_box(noise, 10) < 30.0);
}

TEST_CASE("nelder mead minimizes smooth functions") {
    auto quadratic = [](const std::vector<double>& v) {
        return (v[0] - 3.0) * (v[0] - 3.0) + (v[1] + 1.0) * (v[1] + 1.0);
    };
    auto r = nelder_mead(quadratic, {0.0, 0.0});
    CHECK(r.converged);
    CHECK_THAT(r.x[0], Catch::Matchers::WithinAbs(3.0, 1e-4));
    CHECK_THAT(r.x[1], Catch::Matchers::WithinAbs(-1.0, 1e-4));

    auto rosenbrock = [](const std::vector<double>& v) {
        const double a = 1.0 - v[0];
        const double b = v[1] - v[0] * v[0];
        return a * a + 100.0 * b * b;
    };
    r = nelder_mead(rosenbrock, {-1.2, 1.0}, {.initial_step = 0.5, .max_iterations = 5000});
    CHECK_THAT(r.x[0], Catch::Matchers::WithinAbs(1.0, 1e-3));
    CHECK_THAT(r.x[1], Catch::Matchers::WithinAbs(1.0, 1e-3));
}

TEST_CASE("nelder mead respects infeasible regions") {
    auto f = [](const std::vector<double>& v) {
        if (v[0] < 0.5) return std::numeric_limits<double>::infinity();
        return v[0] * v[0];
    };
    const auto r = nelder_mead(f, {1.0});
    CHECK_THAT(r.x[0], Catch::Matchers::WithinAbs(0.5, 1e-3));
    CHECK_THROWS_AS(nelder_mead(f, {0.0}), std::invalid_argument);
}

TEST_CASE("ols recovers exact linear relationships") {
    std::vector<double> ones(10, 1.0), t(10), y(10);
    for (int i = 0; i < 10; ++i) {
        t[i] = i + 1;
        y[i] = 2.0 + 3.0 * t[i];
    }
    const auto beta = ols_solve({ones, t}, y);
    CHECK_THAT(beta[0], Catch::Matchers::WithinAbs(2.0, 1e-9));
    CHECK_THAT(beta[1], Catch::Matchers::WithinAbs(3.0, 1e-9));
    CHECK_THROWS_AS(ols_solve({ones, ones}, y), std::invalid_argument);
}

TEST_CASE("ols residuals are orthogonal to the design") {
    Rng rng(5);
    const std::size_t n = 60;
    std::vector<double> ones(n, 1.0), t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<double>(i);
        y[i] = 1.0 + 0.2 * t[i] + rng.normal();
    }
    const auto beta = ols_solve({ones, t}, y);
    double dot1 = 0.0, dot2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = y[i] - beta[0] - beta[1] * t[i];
        dot1 += resid;
        dot2 += resid * t[i];
    }
    CHECK_THAT(dot1, Catch::Matchers::WithinAbs(0.0, 1e-8));
    CHECK_THAT(dot2, Catch::Matchers::WithinAbs(0.0, 1e-6));
}

TEST_CASE("csv doubles survive a write/read round trip bit for bit") {
    femon::testing::TempDir dir;
    const std::vector<double> values{1.0 / 3.0, -0.0,   1e-300,          1e300,
                                     3.141592653589793, -2.5e-17, 123456789.123456789};
    CsvTable table;
    table.header = {"x"};
    for (double v : values) table.rows.push_back({format_double(v)});
    const std::string path = dir.file("round.csv");
    write_csv(path, table);

    const CsvTable back = read_csv(path);
    REQUIRE(back.rows.size() == values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double parsed = parse_double(back.rows[i][0], "row");
        CHECK(std::memcmp(&parsed, &values[i], sizeof(double)) == 0);
    }
}

TEST_CASE("csv reader reports precise errors") {
    femon::testing::TempDir dir;
    CHECK_THROWS_AS(read_csv(dir.file("missing.csv")), std::runtime_error);

    const std::string ragged = dir.file("ragged.csv");
    {
        std::ofstream out(ragged);
        out << "a,b\n1,2\n3\n";
    }
    CHECK_THROWS_WITH(read_csv(ragged), Catch::Matchers::ContainsSubstring("row 3"));

    CsvTable table;
    table.header = {"a", "b"};
    CHECK_THROWS_WITH(table.column_index("c"), Catch::Matchers::ContainsSubstring("a, b"));
    CHECK_THROWS_WITH(parse_double("1.2x", "row 4"), Catch::Matchers::ContainsSubstring("row 4"));
}

TEST_CASE("split spec resolves counts and fractions with clamping") {
    CHECK(SplitSpec::count(9).resolve(10) == 9);
    CHECK_THROWS_AS(SplitSpec::count(1).resolve(10), std::invalid_argument);
    CHECK_THROWS_AS(SplitSpec::count(10).resolve(10), std::invalid_argument);
    CHECK(SplitSpec::fraction(0.75).resolve(300) == 225);
    CHECK(SplitSpec::fraction(0.001).resolve(100) == 2);
    CHECK(SplitSpec::fraction(0.999).resolve(100) == 99);
    CHECK_THROWS_AS(SplitSpec::fraction(0.0), std::invalid_argument);
    CHECK_THROWS_AS(SplitSpec::fraction(1.0), std::invalid_argument);
    CHECK_THROWS_AS(SplitSpec::count(2).resolve(2), std::invalid_argument);
}

TEST_CASE("error stream validation enforces the split invariant") {
    ErrorStream s;
    s.errors = {1.0, 2.0, 3.0, 4.0};
    s.m = 2;
    CHECK_NOTHROW(s.validate());
    CHECK(s.monitoring_length() == 2);
    s.m = 1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.m = 4;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("load series reads columns with timestamps and reports bad cells") {
    femon::testing::TempDir dir;
    const std::string path = dir.file("series.csv");
    {
        std::ofstream out(path);
        out << "date,value,extra\r\n2020-01-01,1.5,9\n2020-02-01,-2.25,9\n2020-03-01,0.125,9\n";
    }
    const TimeSeries ts = load_series(path, "value", 12, "date");
    REQUIRE(ts.size() == 3);
    CHECK(ts.values[1] == -2.25);
    CHECK(ts.frequency == 12);
    CHECK(ts.timestamps[2] == "2020-03-01");

    const TimeSeries prefix = ts.prefix(2);
    CHECK(prefix.size() == 2);
    CHECK(prefix.timestamps.size() == 2);

    CHECK_THROWS_WITH(load_series(path, "nope"), Catch::Matchers::ContainsSubstring("value"));
    {
        std::ofstream out(path);
        out << "value\n1.5\nbad\n";
    }
    CHECK_THROWS_WITH(load_series(path, "value"), Catch::Matchers::ContainsSubstring("row 3"));
}

TEST_CASE("error stream csv round trips bit for bit") {
    femon::testing::TempDir dir;
    ErrorStream stream;
    stream.errors = {1.0 / 3.0, -2.718281828459045, 1e-12, 4.0, -0.125};
    stream.m = 3;
    const std::string path = dir.file("errors.csv");
    write_errors_csv(path, stream);

    const TimeSeries back = load_series(path, "error");
    REQUIRE(back.size() == stream.errors.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(std::memcmp(&back.values[i], &stream.errors[i], sizeof(double)) == 0);
    }

    const ErrorStream round = read_errors_csv(path);
    CHECK(round.m == 3);
    CHECK(round.errors == stream.errors);

    CsvTable broken = read_csv(path);
    broken.rows[1][2] = "monitor";  // a train row after a monitor row
    const std::string bad_path = dir.file("broken.csv");
    write_csv(bad_path, broken);
    CHECK_THROWS_WITH(read_errors_csv(bad_path),
                      Catch::Matchers::ContainsSubstring("prefix"));
}
