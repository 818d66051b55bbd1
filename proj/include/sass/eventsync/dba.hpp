#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "sass/error.hpp"
#include "sass/eventsync/dtw.hpp"
#include "sass/eventsync/series.hpp"

namespace sass::eventsync {

struct GestureTemplate {
    std::vector<double> values;   // rest-relative z profile (metres above the rest level)
    double sample_rate_hz = 30.0;
    double dtw_threshold = 0.8;

    void validate() const {
        if (values.empty()) throw ConfigError("template is empty");
        for (double v : values)
            if (!std::isfinite(v)) throw ConfigError("template values must be finite");
        if (!(dtw_threshold > 0.0)) throw ConfigError("dtw_threshold must be positive");
        if (!(sample_rate_hz > 0.0)) throw ConfigError("sample_rate must be positive");
    }
};

inline constexpr int kTemplateFormatVersion = 1;

inline nlohmann::json to_json(const GestureTemplate& t) {
    return {{"version", kTemplateFormatVersion},
            {"kind", "gesture_template"},
            {"values", t.values},
            {"sample_rate_hz", t.sample_rate_hz},
            {"dtw_threshold", t.dtw_threshold}};
}

inline GestureTemplate template_from_json(const nlohmann::json& j) {
    if (j.value("version", 0) != kTemplateFormatVersion) throw ValidationError("unsupported template version");
    GestureTemplate t;
    t.values = j.at("values").get<std::vector<double>>();
    t.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    t.dtw_threshold = j.at("dtw_threshold").get<double>();
    t.validate();
    return t;
}

/// Squared-difference DTW. DBA's mean update minimises this cost for fixed
/// alignments, which is what makes the within-set cost non-increasing.
inline double dba_cost(const std::vector<std::vector<double>>& set, const std::vector<double>& average) {
    double total = 0.0;
    for (const auto& s : set) total += dtw_sq(average, s, false).cost;
    return total;
}

struct DbaResult {
    std::vector<double> average;
    std::vector<double> cost_history;  // within-set cost before the first and after every iteration
};

/// DTW barycenter averaging, initialised at the set medoid.
inline DbaResult dba(const std::vector<std::vector<double>>& set, int iterations) {
    if (set.empty()) throw UsageError("DBA needs at least one sequence");
    if (iterations < 1) throw UsageError("DBA needs at least one iteration");
    for (const auto& s : set)
        if (s.empty()) throw UsageError("DBA sequences must be non-empty");

    std::size_t medoid = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < set.size(); ++k) {
        const double c = dba_cost(set, set[k]);
        if (c < best) {
            best = c;
            medoid = k;
        }
    }

    DbaResult r;
    r.average = set[medoid];
    r.cost_history.push_back(best);
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> sum(r.average.size(), 0.0);
        std::vector<std::size_t> count(r.average.size(), 0);
        for (const auto& s : set) {
            for (auto [i, j] : dtw_sq(r.average, s).path) {
                sum[i] += s[j];
                ++count[i];
            }
        }
        for (std::size_t i = 0; i < sum.size(); ++i) r.average[i] = sum[i] / static_cast<double>(count[i]);
        r.cost_history.push_back(dba_cost(set, r.average));
    }
    return r;
}

/// Builds a gesture template from example z-series (one channel each).
inline GestureTemplate dba_template(const std::vector<TimeSeries>& sequences, int iterations,
                                    double dtw_threshold = 0.8) {
    if (sequences.empty()) throw UsageError("DBA needs at least one sequence");
    std::vector<std::vector<double>> set;
    for (const auto& s : sequences) {
        if (s.channels != 1) throw UsageError("gesture templates are single-channel");
        set.push_back(s.values);
    }
    GestureTemplate t;
    t.values = dba(set, iterations).average;
    const auto& ts = sequences.front().timestamps;
    if (ts.size() >= 2) t.sample_rate_hz = static_cast<double>(ts.size() - 1) / to_seconds(ts.back() - ts.front());
    t.dtw_threshold = dtw_threshold;
    t.validate();
    return t;
}

}  // namespace sass::eventsync
