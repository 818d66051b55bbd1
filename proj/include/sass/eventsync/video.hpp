#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "sass/eventsync/dba.hpp"
#include "sass/eventsync/dtw.hpp"
#include "sass/eventsync/events.hpp"
#include "sass/eventsync/series.hpp"

namespace sass::eventsync {

/// Rest level of a window: its low percentile, robust to the raised segment.
inline double rest_level(std::span<const double> values, double quantile = 0.1) {
    std::vector<double> v(values.begin(), values.end());
    const auto k = static_cast<std::size_t>(quantile * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

/// Rest-relative profile of a raw z excerpt; templates are stored this way.
inline std::vector<double> rest_relative(std::span<const double> values) {
    const double base = rest_level(values);
    std::vector<double> out(values.begin(), values.end());
    for (double& x : out) x -= base;
    return out;
}

/// DTW distance of a rest-relative window to the template, divided by the
/// template's own mass. A motionless window scores about 1, an exact match 0.
inline double relative_dtw_score(std::span<const double> window, const GestureTemplate& tmpl) {
    const auto w = rest_relative(window);
    double mass = 0.0;
    for (double v : tmpl.values) mass += std::abs(v);
    if (mass <= 0.0) throw ConfigError("template has no motion");
    return dtw_abs(w, tmpl.values, false).cost / mass;
}

struct WindowScore {
    Timestamp start{};
    Timestamp end{};
    double score = 0.0;
};

/// Slides a `window`-long frame over the series at `stride`, scoring each position.
inline std::vector<WindowScore> score_windows(const TimeSeries& z, const GestureTemplate& tmpl, Duration window,
                                              Duration stride) {
    if (z.empty()) return {};
    if (z.timestamps.back() - z.timestamps.front() < window)
        throw UsageError("series shorter than the detection window");
    if (stride <= Duration::zero()) throw ConfigError("stride must be positive");
    std::vector<WindowScore> out;
    std::size_t lo = 0;
    for (Timestamp t = z.timestamps.front(); t + window <= z.timestamps.back(); t += stride) {
        while (lo < z.size() && z.timestamps[lo] < t) ++lo;
        std::size_t hi = lo;
        while (hi < z.size() && z.timestamps[hi] < t + window) ++hi;
        if (hi - lo < 2) continue;
        const std::span<const double> w(z.values.data() + lo, hi - lo);
        out.push_back({t, t + window, relative_dtw_score(w, tmpl)});
    }
    return out;
}

/// Rest padding makes the score flat under small shifts, so the event start is
/// placed through the warp path: the window sample matched to the template's
/// rise, minus the rise offset inside the template.
inline Timestamp anchored_start(const TimeSeries& z, const WindowScore& w, const GestureTemplate& tmpl) {
    std::size_t lo = 0;
    while (lo < z.size() && z.timestamps[lo] < w.start) ++lo;
    std::size_t hi = lo;
    while (hi < z.size() && z.timestamps[hi] < w.end) ++hi;
    const auto rel = rest_relative(std::span<const double>(z.values.data() + lo, hi - lo));
    const double peak = *std::max_element(tmpl.values.begin(), tmpl.values.end());
    std::size_t rise = 0;
    while (rise + 1 < tmpl.values.size() && tmpl.values[rise] < 0.1 * peak) ++rise;
    const auto path = dtw_abs(rel, tmpl.values).path;
    std::size_t matched = 0;
    for (const auto& [i, j] : path)
        if (j == rise) {
            matched = i;
            break;
        }
    return z.timestamps[lo + matched] - from_seconds(static_cast<double>(rise) / tmpl.sample_rate_hz);
}

/// Windows scoring below the template threshold; overlapping hits collapse to
/// the lowest-distance window of each overlapping run.
inline std::vector<EventDetection> detect_gesture_video(const TimeSeries& z, const GestureTemplate& tmpl,
                                                        Duration window, Duration stride,
                                                        const std::string& stream_id = "camera") {
    tmpl.validate();
    const auto scores = score_windows(z, tmpl, window, stride);
    std::vector<EventDetection> events;
    std::optional<WindowScore> best;
    Timestamp run_end{};
    auto emit = [&](const WindowScore& w) {
        const Timestamp start = anchored_start(z, w, tmpl);
        return EventDetection{stream_id, start, start + (w.end - w.start), w.score, Stage::coarse};
    };
    for (const auto& w : scores) {
        if (!(w.score < tmpl.dtw_threshold)) continue;
        if (best && w.start < run_end) {
            if (w.score < best->score) best = w;
            run_end = std::max(run_end, w.end);
            continue;
        }
        if (best) events.push_back(emit(*best));
        best = w;
        run_end = w.end;
    }
    if (best) events.push_back(emit(*best));
    return events;
}

}  // namespace sass::eventsync
