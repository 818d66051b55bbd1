#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <random>
#include <string>

#include "sass/error.hpp"
#include "sass/time.hpp"

namespace sass::services {

/// Injected time source; every service reads time only through this.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() override {
        return Timestamp{std::chrono::duration_cast<std::chrono::nanoseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count()};
    }
};

class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = Timestamp{0}) : now_(start) {}
    Timestamp now() override { return now_; }
    void set(Timestamp t) { now_ = t; }
    void advance(Duration d) { now_ = now_ + d; }

private:
    Timestamp now_;
};

inline constexpr int kIsoFractionDigits = 4;

/// "YYYY-MM-DDTHH:MM:SS.ffff" in UTC with no zone suffix, fraction truncated.
inline std::string format_iso(Timestamp t) {
    using namespace std::chrono;
    const sys_time<nanoseconds> tp{nanoseconds{t.ns}};
    const auto day = floor<days>(tp);
    const year_month_day ymd{day};
    const hh_mm_ss<nanoseconds> hms{tp - day};
    const auto frac = hms.subseconds().count() / 100'000;  // 1e-4 s units
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%04lld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()), static_cast<long long>(frac));
    return buf;
}

/// Drops precision the wire format cannot carry, so live state and state
/// rebuilt from the log agree exactly.
inline Timestamp truncate_iso(Timestamp t) {
    constexpr std::int64_t q = 100'000;
    std::int64_t r = t.ns % q;
    if (r < 0) r += q;
    return Timestamp{t.ns - r};
}

/// Accepts 0-9 fractional digits; device clocks report 3 or 4 in practice.
inline Timestamp parse_iso(const std::string& s) {
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, used = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec, &used) != 6 || used != 19)
        throw ValidationError("not an ISO-8601 timestamp: " + s);
    std::int64_t frac_ns = 0;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::int64_t scale = 100'000'000;
        std::size_t digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (++digits > 9) throw ValidationError("too many fractional digits: " + s);
            frac_ns += (s[pos] - '0') * scale;
            scale /= 10;
            ++pos;
        }
        if (digits == 0) throw ValidationError("empty fraction: " + s);
    }
    if (pos == s.size() - 1 && s[pos] == 'Z') ++pos;
    if (pos != s.size()) throw ValidationError("trailing characters in timestamp: " + s);
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) throw ValidationError("timestamp out of range: " + s);
    const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
    return Timestamp{duration_cast<nanoseconds>(tp.time_since_epoch()).count() + frac_ns};
}

/// RFC 4122 version-4 identifiers from a seedable generator.
class IdGenerator {
public:
    explicit IdGenerator(std::uint64_t seed = std::random_device{}()) : rng_(seed) {}

    std::string uuid4() {
        std::lock_guard lock(mu_);
        std::uint64_t hi = rng_(), lo = rng_();
        hi = (hi & 0xFFFFFFFFFFFF0FFFULL) | 0x0000000000004000ULL;  // version 4
        lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;  // variant 10
        char buf[37];
        std::snprintf(buf, sizeof buf, "%08llx-%04llx-%04llx-%04llx-%012llx",
                      static_cast<unsigned long long>(hi >> 32), static_cast<unsigned long long>((hi >> 16) & 0xFFFF),
                      static_cast<unsigned long long>(hi & 0xFFFF), static_cast<unsigned long long>(lo >> 48),
                      static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFULL));
        return buf;
    }

private:
    std::mutex mu_;
    std::mt19937_64 rng_;
};

}  // namespace sass::services
