#pragma once

#include <string>
#include <vector>

#include "sass/eventsync/events.hpp"
#include "sass/eventsync/features.hpp"
#include "sass/eventsync/hmm.hpp"

namespace sass::eventsync {

struct ImuDetectorConfig {
    FeatureWindowing features;
    std::size_t idle_state = 0;      // after canonical ordering, the lowest-energy state
    std::size_t min_windows = 2;     // shortest non-idle run reported as a gesture
};

/// Viterbi-decodes the windowed feature sequence and reports each run of
/// non-idle states as one gesture event. Score is the run's mean per-window
/// emission log-density under the decoded states.
inline std::vector<EventDetection> detect_gesture_imu(const TimeSeries& imu, const HmmModel& model,
                                                      const ImuDetectorConfig& cfg = {},
                                                      const std::string& stream_id = "imu") {
    const auto seq = feature_sequence(imu, cfg.features);
    std::vector<EventDetection> events;
    if (seq.observations.empty()) return events;
    const auto decoded = viterbi_decode(model, seq.observations);
    const std::size_t T = decoded.path.size();
    std::size_t t = 0;
    while (t < T) {
        if (decoded.path[t] == cfg.idle_state) {
            ++t;
            continue;
        }
        std::size_t u = t;
        double score = 0.0;
        while (u < T && decoded.path[u] != cfg.idle_state) {
            score += model.log_emission(decoded.path[u], seq.observations[u]);
            ++u;
        }
        if (u - t >= cfg.min_windows)
            events.push_back({stream_id, seq.window_starts[t], seq.window_starts[u - 1] + cfg.features.window,
                              score / static_cast<double>(u - t), Stage::coarse});
        t = u;
    }
    return events;
}

}  // namespace sass::eventsync
