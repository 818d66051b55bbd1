#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "sass/error.hpp"
#include "sass/services/capture.hpp"

namespace sass::services {

struct DistillPolicy {
    bool anonymize = false;
    std::string salt;
    int grid_decimals = 3;
    std::optional<Duration> aggregate_window;
    Duration delay = Duration::zero();

    void validate() const {
        if (grid_decimals < 0 || grid_decimals > 9) throw ConfigError("grid_decimals must be in [0, 9]");
        if (aggregate_window && *aggregate_window <= Duration::zero()) throw ConfigError("aggregate window must be positive");
        if (delay < Duration::zero()) throw ConfigError("delay must be >= 0");
    }
};

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) throw IoError("digest failed");
    std::string out;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

inline double round_to_grid(double v, int decimals) {
    const double s = std::pow(10.0, decimals);
    return std::round(v * s) / s;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

/// Samples younger than `delay` at `now` are withheld. Anonymization hashes
/// identifiers and snaps location to the grid; aggregation emits per-window,
/// per-modality summaries that carry no device identity at all.
inline std::vector<ojson> distill(const std::vector<CapturedSample>& samples, const DistillPolicy& policy, Timestamp now) {
    policy.validate();
    std::vector<const CapturedSample*> released;
    for (const auto& s : samples)
        if (!(now < s.corrected_ts + policy.delay)) released.push_back(&s);
    std::sort(released.begin(), released.end(),
              [](const auto* a, const auto* b) { return a->corrected_ts < b->corrected_ts; });

    std::vector<ojson> out;
    if (!policy.aggregate_window) {
        for (const auto* s : released) {
            ojson j = to_json(*s);
            if (policy.anonymize) {
                j["device_id"] = sha256_hex(policy.salt + s->device_id);
                j["capture_id"] = sha256_hex(policy.salt + s->capture_id);
                j["location"] = {{"latitude", round_to_grid(s->location.latitude, policy.grid_decimals)},
                                 {"longitude", round_to_grid(s->location.longitude, policy.grid_decimals)}};
            }
            out.push_back(std::move(j));
        }
        return out;
    }

    struct Acc {
        std::size_t n = 0;
        std::vector<double> sum, sumsq, lo, hi;
        std::set<std::string> devices;
    };
    const std::int64_t w = policy.aggregate_window->count();
    std::map<std::pair<std::int64_t, std::string>, Acc> bins;
    for (const auto* s : released) {
        auto& a = bins[{floor_div(s->corrected_ts.ns, w), std::string(timebase::to_string(s->modality))}];
        if (a.n == 0) {
            a.sum.assign(s->payload.size(), 0.0);
            a.sumsq = a.sum;
            a.lo.assign(s->payload.size(), INFINITY);
            a.hi.assign(s->payload.size(), -INFINITY);
        }
        ++a.n;
        for (std::size_t k = 0; k < s->payload.size() && k < a.sum.size(); ++k) {
            const double v = s->payload[k];
            a.sum[k] += v;
            a.sumsq[k] += v * v;
            a.lo[k] = std::min(a.lo[k], v);
            a.hi[k] = std::max(a.hi[k], v);
        }
        a.devices.insert(s->device_id);
    }
    for (const auto& [key, a] : bins) {
        std::vector<double> mean(a.sum.size()), sd(a.sum.size());
        for (std::size_t k = 0; k < a.sum.size(); ++k) {
            mean[k] = a.sum[k] / static_cast<double>(a.n);
            sd[k] = std::sqrt(std::max(0.0, a.sumsq[k] / static_cast<double>(a.n) - mean[k] * mean[k]));
        }
        out.push_back({{"window_start_ns", key.first * w},
                       {"window_end_ns", (key.first + 1) * w},
                       {"modality", key.second},
                       {"count", a.n},
                       {"sources", a.devices.size()},
                       {"mean", mean},
                       {"std", sd},
                       {"min", a.lo},
                       {"max", a.hi}});
    }
    return out;
}

}  // namespace sass::services
