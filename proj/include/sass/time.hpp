#pragma once

#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>

namespace sass {

using Duration = std::chrono::nanoseconds;

/// Integer nanoseconds since the Unix epoch. Arithmetic with Duration is exact.
struct Timestamp {
    std::int64_t ns = 0;

    constexpr Timestamp() = default;
    constexpr explicit Timestamp(std::int64_t v) : ns(v) {}

    static Timestamp from_seconds(double s) {
        return Timestamp{static_cast<std::int64_t>(std::llround(s * 1e9))};
    }
    constexpr double seconds() const { return static_cast<double>(ns) * 1e-9; }

    constexpr auto operator<=>(const Timestamp&) const = default;

    constexpr Timestamp& operator+=(Duration d) {
        ns += d.count();
        return *this;
    }
    constexpr Timestamp& operator-=(Duration d) {
        ns -= d.count();
        return *this;
    }
};

constexpr Timestamp operator+(Timestamp t, Duration d) { return Timestamp{t.ns + d.count()}; }
constexpr Timestamp operator-(Timestamp t, Duration d) { return Timestamp{t.ns - d.count()}; }
constexpr Duration operator-(Timestamp a, Timestamp b) { return Duration{a.ns - b.ns}; }

constexpr double to_seconds(Duration d) { return static_cast<double>(d.count()) * 1e-9; }
inline Duration from_seconds(double s) { return Duration{static_cast<std::int64_t>(std::llround(s * 1e9))}; }
constexpr Duration milliseconds(std::int64_t ms) { return std::chrono::milliseconds(ms); }

}  // namespace sass
