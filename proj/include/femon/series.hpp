#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "femon/csv.hpp"

namespace femon {

/// Univariate series with an optional seasonal frequency (1 = none) and
/// optional string timestamps carried through from the source file.
struct TimeSeries {
    std::vector<double> values;
    int frequency = 1;
    std::vector<std::string> timestamps;

    void validate() const {
        if (values.empty()) throw std::invalid_argument("TimeSeries: values must be non-empty");
        if (frequency < 1) throw std::invalid_argument("TimeSeries: frequency must be >= 1");
        if (!timestamps.empty() && timestamps.size() != values.size())
            throw std::invalid_argument("TimeSeries: timestamps must match values in length");
    }

    std::size_t size() const { return values.size(); }

    /// First `n` observations (timestamps included when present).
    TimeSeries prefix(std::size_t n) const {
        if (n == 0 || n > values.size())
            throw std::invalid_argument("TimeSeries::prefix: n out of range");
        TimeSeries out;
        out.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n));
        out.frequency = frequency;
        if (!timestamps.empty())
            out.timestamps.assign(timestamps.begin(),
                                  timestamps.begin() + static_cast<std::ptrdiff_t>(n));
        return out;
    }
};

///// Where a monitored stream came from: one-step forecast errors produced by
/// a fitted model, or values supplied directly (e.g. raw observations).
enum class StreamOrigin { model_forecast, external };

/// An ordered stream split into a training block of length m followed by
/// the monitoring block.
struct ErrorStream {
    std::vector<double> errors;
    std::size_t m = 0;
    StreamOrigin origin = StreamOrigin::external;

    void validate() const {
        if (errors.size() < 3)
            throw std::invalid_argument("ErrorStream: need at least 3 values");
        if (m < 2 || m >= errors.size())
            throw std::invalid_argument("ErrorStream: require 2 <= m <= n-1 with a non-empty "
                                        "monitoring block");
    }

    std::size_t monitoring_length() const { return errors.size() - m; }
};

/// Training-block size given either as an absolute count or as a fraction
/// of the stream length.
struct SplitSpec {
    static SplitSpec count(std::size_t m) {
        SplitSpec s;
        s.count_ = m;
        s.by_fraction_ = false;
        return s;
    }

    static SplitSpec fraction(double f) {
        if (!(f > 0.0 && f < 1.0))
            throw std::invalid_argument("SplitSpec: fraction must lie in (0, 1)");
        SplitSpec s;
        s.fraction_ = f;
        s.by_fraction_ = true;
        return s;
    }

    /// Resolved training length for a stream of size n.  Fractions are
    /// floored and clamped into [2, n-1]; explicit counts must already lie
    /// in that range.
    std::size_t resolve(std::size_t n) const {
        if (n < 3) throw std::invalid_argument("SplitSpec: stream too short to split (n < 3)");
        if (by_fraction_) {
            auto m = static_cast<std::size_t>(fraction_ * static_cast<double>(n));
            if (m < 2) m = 2;
            if (m > n - 1) m = n - 1;
            return m;
        }
        if (count_ < 2 || count_ > n - 1)
            throw std::invalid_argument("SplitSpec: training count must lie in [2, n-1], got " +
                                        std::to_string(count_) + " for n = " + std::to_string(n));
        return count_;
    }

    bool is_fraction() const { return by_fraction_; }

private:
    std::size_t count_ = 0;
    double fraction_ = 0.0;
    bool by_fraction_ = false;
};

/// Splits an externally supplied value sequence into an ErrorStream.
inline ErrorStream split_errors(std::vector<double> values, const SplitSpec& split,
                                StreamOrigin origin = StreamOrigin::external) {
    ErrorStream stream;
    stream.m = split.resolve(values.size());
    stream.errors = std::move(values);
    stream.origin = origin;
    stream.validate();
    return stream;
}

/// Loads one numeric column from a CSV file.  Throws with the offending
/// row number on unparseable cells.
inline TimeSeries load_series(const std::string& path, const std::string& column,
                              int frequency = 1, const std::string& timestamp_column = "") {
    const CsvTable table = read_csv(path);
    const std::size_t col = table.column_index(column);
    const std::size_t ts_col = timestamp_column.empty() ? 0 : table.column_index(timestamp_column);

    TimeSeries series;
    series.frequency = frequency;
    series.values.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string where = "row " + std::to_string(r + 2) + " of '" + path + "'";
        series.values.push_back(parse_double(table.rows[r][col], where));
        if (!timestamp_column.empty()) series.timestamps.push_back(table.rows[r][ts_col]);
    }
    series.validate();
    return series;
}

/// Writes a stream as a CSV of (index starting at 1, value, phase), where
/// phase marks the training block so the split survives a round trip.
/// Values are formatted to read back bit-identical.
inline void write_errors_csv(const std::string& path, const ErrorStream& stream) {
    CsvTable table;
    table.header = {"index", "error", "phase"};
    table.rows.reserve(stream.errors.size());
    for (std::size_t i = 0; i < stream.errors.size(); ++i)
        table.rows.push_back({std::to_string(i + 1), format_double(stream.errors[i]),
                              i < stream.m ? "train" : "monitor"});
    write_csv(path, table);
}

/// Reads a stream written by write_errors_csv, restoring the training
/// length from the phase column.
inline ErrorStream read_errors_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const std::size_t value_col = table.column_index("error");
    const std::size_t phase_col = table.column_index("phase");
    ErrorStream stream;
    bool in_training = true;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string where = "row " + std::to_string(r + 2) + " of '" + path + "'";
        stream.errors.push_back(parse_double(table.rows[r][value_col], where));
        const std::string& phase = table.rows[r][phase_col];
        if (phase == "train") {
            if (!in_training)
                throw std::runtime_error("'" + path + "': training rows must form a prefix");
            ++stream.m;
        } else if (phase == "monitor") {
            in_training = false;
        } else {
            throw std::runtime_error("'" + path + "': unknown phase '" + phase + "'");
        }
    }
    stream.validate();
    return stream;
}

}  // namespace femon
