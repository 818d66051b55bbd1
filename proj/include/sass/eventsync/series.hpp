#pragma once

#include <span>
#include <string>
#include <vector>

#include "sass/error.hpp"
#include "sass/time.hpp"

namespace sass::eventsync {

/// Uniformly shaped multichannel series stored row-major.
struct TimeSeries {
    std::vector<Timestamp> timestamps;
    std::vector<double> values;
    std::size_t channels = 1;
    std::vector<std::string> labels;

    std::size_t size() const { return timestamps.size(); }
    bool empty() const { return timestamps.empty(); }

    std::span<const double> row(std::size_t i) const { return {values.data() + i * channels, channels}; }
    double at(std::size_t i, std::size_t c = 0) const { return values[i * channels + c]; }

    void push_back(Timestamp t, std::span<const double> row) {
        if (row.size() != channels) throw UsageError("row width does not match channel count");
        timestamps.push_back(t);
        values.insert(values.end(), row.begin(), row.end());
    }
    void push_back(Timestamp t, double v) { push_back(t, std::span<const double>(&v, 1)); }

    /// Single channel extracted as a new series.
    TimeSeries channel(std::size_t c) const {
        TimeSeries out;
        out.timestamps = timestamps;
        out.values.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) out.values.push_back(at(i, c));
        if (c < labels.size()) out.labels = {labels[c]};
        return out;
    }

    /// Samples with timestamps in [begin, end).
    TimeSeries slice(Timestamp begin, Timestamp end) const {
        TimeSeries out;
        out.channels = channels;
        out.labels = labels;
        for (std::size_t i = 0; i < size(); ++i) {
            if (timestamps[i] >= begin && timestamps[i] < end) {
                out.timestamps.push_back(timestamps[i]);
                auto r = row(i);
                out.values.insert(out.values.end(), r.begin(), r.end());
            }
        }
        return out;
    }

    void validate() const {
        if (values.size() != timestamps.size() * channels) throw UsageError("values length does not match timestamps");
        for (std::size_t i = 1; i < timestamps.size(); ++i)
            if (!(timestamps[i - 1] < timestamps[i])) throw UsageError("timestamps must be strictly increasing");
    }

    static TimeSeries uniform(Timestamp start, double rate_hz, std::span<const double> scalar_values) {
        TimeSeries s;
        const double period_ns = 1e9 / rate_hz;
        for (std::size_t i = 0; i < scalar_values.size(); ++i)
            s.push_back(start + Duration{static_cast<std::int64_t>(std::llround(period_ns * static_cast<double>(i)))},
                        scalar_values[i]);
        return s;
    }
};

}  // namespace sass::eventsync
