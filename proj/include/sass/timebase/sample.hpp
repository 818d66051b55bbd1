#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sass/error.hpp"
#include "sass/time.hpp"
#include "sass/timebase/clock_model.hpp"

namespace sass::timebase {

enum class Modality { camera_series, imu, wearable, detection };

inline std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::camera_series: return "camera_series";
        case Modality::imu: return "imu";
        case Modality::wearable: return "wearable";
        case Modality::detection: return "detection";
    }
    return "unknown";
}

inline Modality parse_modality(std::string_view s) {
    if (s == "camera_series") return Modality::camera_series;
    if (s == "imu") return Modality::imu;
    if (s == "wearable") return Modality::wearable;
    if (s == "detection") return Modality::detection;
    throw ValidationError("unknown modality: " + std::string(s));
}

/// Payload arity per modality: z; (ax, ay, az, gx, gy, gz); one physiological
/// channel; (x, y, confidence).
inline std::size_t payload_arity(Modality m) {
    switch (m) {
        case Modality::camera_series: return 1;
        case Modality::imu: return 6;
        case Modality::wearable: return 1;
        case Modality::detection: return 3;
    }
    return 0;
}

struct GeoPoint {
    double latitude = 0.0;
    double longitude = 0.0;
    bool operator==(const GeoPoint&) const = default;
};

struct SensorSample {
    std::string device_id;
    Modality modality = Modality::imu;
    Timestamp local_ts{};
    std::optional<Timestamp> corrected_ts;
    std::vector<double> payload;
    std::optional<GeoPoint> location;

    Timestamp effective_ts() const { return corrected_ts.value_or(local_ts); }
};

struct StreamDescriptor {
    std::string device_id;
    Modality modality = Modality::imu;
    double nominal_rate_hz = 1.0;
};

struct SampleStream {
    StreamDescriptor descriptor;
    std::vector<SensorSample> samples;

    /// Checks nondecreasing local_ts, arity and positive rate.
    void validate() const {
        if (!(descriptor.nominal_rate_hz > 0.0)) throw ValidationError("nominal_rate must be positive");
        const std::size_t arity = payload_arity(descriptor.modality);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].payload.size() != arity)
                throw ValidationError("payload arity mismatch in stream " + descriptor.device_id);
            if (i > 0 && samples[i].local_ts < samples[i - 1].local_ts)
                throw ValidationError("samples out of order in stream " + descriptor.device_id);
        }
    }

    bool corrected() const {
        return !samples.empty() &&
               std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.corrected_ts.has_value(); });
    }
};

/// Applies a clock model to every sample of a stream.
inline void apply_clock(SampleStream& stream, const ClockModel& model) {
    for (auto& s : stream.samples) s.corrected_ts = correct_timestamp(s.local_ts, model);
}

// ---- newline-delimited JSON ----

inline nlohmann::json to_json(const SensorSample& s) {
    nlohmann::json j;
    j["device_id"] = s.device_id;
    j["modality"] = std::string(to_string(s.modality));
    j["local_ts_ns"] = s.local_ts.ns;
    j["payload"] = s.payload;
    if (s.location) {
        j["lat"] = s.location->latitude;
        j["lon"] = s.location->longitude;
    } else {
        j["lat"] = nullptr;
        j["lon"] = nullptr;
    }
    if (s.corrected_ts) j["corrected_ts_ns"] = s.corrected_ts->ns;
    return j;
}

inline SensorSample sample_from_json(const nlohmann::json& j) {
    SensorSample s;
    try {
        s.device_id = j.at("device_id").get<std::string>();
        s.modality = parse_modality(j.at("modality").get<std::string>());
        s.local_ts = Timestamp{j.at("local_ts_ns").get<std::int64_t>()};
        s.payload = j.at("payload").get<std::vector<double>>();
        if (j.contains("lat") && !j["lat"].is_null() && j.contains("lon") && !j["lon"].is_null())
            s.location = GeoPoint{j["lat"].get<double>(), j["lon"].get<double>()};
        if (j.contains("corrected_ts_ns") && !j["corrected_ts_ns"].is_null())
            s.corrected_ts = Timestamp{j["corrected_ts_ns"].get<std::int64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad sample record: ") + e.what());
    }
    return s;
}

inline void write_samples(std::ostream& os, const std::vector<SensorSample>& samples) {
    for (const auto& s : samples) os << to_json(s).dump() << '\n';
}

inline std::vector<SensorSample> read_samples(std::istream& is) {
    std::vector<SensorSample> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(sample_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(std::string("bad NDJSON line: ") + e.what());
        }
    }
    return out;
}

/// Groups records by device into streams, preserving file order within each device.
inline std::vector<SampleStream> group_streams(const std::vector<SensorSample>& samples, double nominal_rate_hz) {
    std::vector<SampleStream> streams;
    for (const auto& s : samples) {
        auto it = std::find_if(streams.begin(), streams.end(),
                               [&](const SampleStream& st) { return st.descriptor.device_id == s.device_id; });
        if (it == streams.end()) {
            streams.push_back({{s.device_id, s.modality, nominal_rate_hz}, {}});
            it = std::prev(streams.end());
        }
        it->samples.push_back(s);
    }
    return streams;
}

}  // namespace sass::timebase
