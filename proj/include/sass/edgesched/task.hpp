#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sass/error.hpp"
#include "sass/time.hpp"

namespace sass::edgesched {

using TaskId = std::uint64_t;

enum class ComputeClass { light, heavy };

inline std::string to_string(ComputeClass c) { return c == ComputeClass::light ? "light" : "heavy"; }

inline ComputeClass parse_compute_class(const std::string& s) {
    if (s == "light") return ComputeClass::light;
    if (s == "heavy") return ComputeClass::heavy;
    throw ConfigError("unknown compute class: " + s);
}

/// Lower initial_priority means more urgent.
struct Task {
    TaskId id = 0;
    std::string stage;
    ComputeClass compute_class = ComputeClass::light;
    double initial_priority = 0.0;
    Timestamp entry_time{};
    Duration service_demand{};
    std::optional<Timestamp> deadline;
};

enum class TieBreak { fifo, task_id };

struct SchedulerConfig {
    double alpha = 1.0;
    Duration cycle_period = milliseconds(1);
    TieBreak tie_break = TieBreak::fifo;

    void validate() const {
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
        if (cycle_period <= Duration::zero()) throw ConfigError("cycle period must be positive");
    }
};

/// Wait time in seconds.
inline double wait_seconds(const Task& t, Timestamp now) { return to_seconds(now - t.entry_time); }

/// P(T) = P_initial + alpha * ln(1 + W), W in seconds.
inline double compute_priority(const Task& t, Timestamp now, const SchedulerConfig& cfg) {
    if (now < t.entry_time) throw UsageError("priority requested before the task entered the queue");
    return t.initial_priority + cfg.alpha * std::log1p(wait_seconds(t, now));
}

/// Sort key: aging raises urgency, a larger P_initial lowers it. Two tasks
/// differing by dP swap order once alpha * (ln(1+W_a) - ln(1+W_b)) exceeds dP.
inline double effective_urgency(const Task& t, Timestamp now, const SchedulerConfig& cfg) {
    return compute_priority(t, now, cfg) - 2.0 * t.initial_priority;
}

/// Strict weak order: most urgent first, then the configured tie-break.
inline bool dispatch_before(const Task& a, const Task& b, Timestamp now, const SchedulerConfig& cfg) {
    const double ua = effective_urgency(a, now, cfg), ub = effective_urgency(b, now, cfg);
    if (ua != ub) return ua > ub;
    if (cfg.tie_break == TieBreak::fifo && a.entry_time != b.entry_time) return a.entry_time < b.entry_time;
    return a.id < b.id;
}

/// One pass of the decay scheduler: reprioritise, sort, dispatch into free
/// slots. Dispatched tasks leave `queue`; the rest keep their sorted order.
inline std::vector<Task> schedule_cycle(std::vector<Task>& queue, std::size_t free_slots, Timestamp now,
                                        const SchedulerConfig& cfg) {
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(queue.size());
    for (std::size_t i = 0; i < queue.size(); ++i) keyed.emplace_back(effective_urgency(queue[i], now, cfg), i);
    std::sort(keyed.begin(), keyed.end(), [&](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        const Task &a = queue[x.second], &b = queue[y.second];
        if (cfg.tie_break == TieBreak::fifo && a.entry_time != b.entry_time) return a.entry_time < b.entry_time;
        return a.id < b.id;
    });
    std::vector<Task> dispatched, rest;
    for (const auto& [key, i] : keyed) (dispatched.size() < free_slots ? dispatched : rest).push_back(std::move(queue[i]));
    queue = std::move(rest);
    return dispatched;
}

}  // namespace sass::edgesched
