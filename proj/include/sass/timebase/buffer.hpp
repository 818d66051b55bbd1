#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "sass/error.hpp"
#include "sass/time.hpp"

namespace sass::timebase {

struct BufferPolicy {
    Duration b_min = milliseconds(10);
    double beta = 3.0;
    std::size_t window = 50;

    void validate() const {
        if (b_min <= Duration::zero()) throw ConfigError("b_min must be positive");
        if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
        if (window < 2) throw ConfigError("buffer window must be at least 2");
    }
};

/// Sample standard deviation (n-1) of the most recent `window` intervals, in ns.
inline double arrival_sigma_ns(std::span<const Duration> intervals, std::size_t window) {
    const std::size_t n = std::min(window, intervals.size());
    if (n < 2) return 0.0;
    const auto recent = intervals.last(n);
    double mean = 0.0;
    for (auto d : recent) mean += static_cast<double>(d.count());
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (auto d : recent) {
        const double e = static_cast<double>(d.count()) - mean;
        ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

/// B = max(b_min, beta * sigma_arrival). Fewer than two intervals yields b_min.
inline Duration buffer_size(const BufferPolicy& policy, std::span<const Duration> arrival_intervals) {
    policy.validate();
    const double sigma = arrival_sigma_ns(arrival_intervals, policy.window);
    const auto scaled = Duration{static_cast<std::int64_t>(std::llround(policy.beta * sigma))};
    return std::max(policy.b_min, scaled);
}

}  // namespace sass::timebase
