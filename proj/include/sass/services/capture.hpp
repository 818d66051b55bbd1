#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "sass/error.hpp"
#include "sass/services/registry.hpp"
#include "sass/timebase/clock_model.hpp"
#include "sass/timebase/sample.hpp"

namespace sass::services {

struct CapturedSample {
    std::string capture_id;
    std::string device_id;
    timebase::Modality modality = timebase::Modality::imu;
    Timestamp local_ts{};
    Timestamp corrected_ts{};
    Location location;
    std::vector<double> payload;
    bool operator==(const CapturedSample&) const = default;
};

inline ojson to_json(const CapturedSample& s) {
    return {{"capture_id", s.capture_id},
            {"device_id", s.device_id},
            {"modality", std::string(timebase::to_string(s.modality))},
            {"local_ts_ns", s.local_ts.ns},
            {"corrected_ts_ns", s.corrected_ts.ns},
            {"location",
             {{"latitude", s.location.latitude}, {"longitude", s.location.longitude}, {"description", s.location.description}}},
            {"payload", s.payload}};
}

inline CapturedSample captured_from_json(const ojson& j) {
    try {
        const auto& loc = j.at("location");
        return CapturedSample{j.at("capture_id").get<std::string>(),
                              j.at("device_id").get<std::string>(),
                              timebase::parse_modality(j.at("modality").get<std::string>()),
                              Timestamp{j.at("local_ts_ns").get<std::int64_t>()},
                              Timestamp{j.at("corrected_ts_ns").get<std::int64_t>()},
                              Location{loc.at("latitude").get<double>(), loc.at("longitude").get<double>(),
                                       loc.at("description").get<std::string>()},
                              j.at("payload").get<std::vector<double>>()};
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("malformed capture record: ") + e.what());
    }
}

/// Tags incoming samples with registry location, a clock-corrected timestamp
/// and a per-batch capture id, and persists them.
class CaptureService {
public:
    static constexpr const char* kStream = "captures";

    CaptureService(Registry& registry, Storage& storage, IdGenerator& ids)
        : registry_(registry), storage_(storage), ids_(ids) {
        for (const auto& j : storage_.read(kStream)) index(captured_from_json(j));
    }

    void set_clock_model(const std::string& device_id, const timebase::ClockModel& m) {
        std::lock_guard lock(mu_);
        clocks_[device_id] = m;
    }

    /// Returns the capture id assigned to the batch.
    std::string ingest(const std::vector<timebase::SensorSample>& samples, const std::string& device_token) {
        const Claims c = registry_.authenticate(device_token, {Role::device});
        DeviceRecord dev;
        try {
            dev = registry_.device(c.subject);
        } catch (const NotFoundError&) {
            throw AuthError("token subject is not a registered device");
        }
        for (const auto& s : samples)
            if (!s.device_id.empty() && s.device_id != dev.device_id)
                throw AuthError("sample for " + s.device_id + " submitted with token for " + dev.device_id);

        std::lock_guard lock(mu_);
        const std::string cid = ids_.uuid4();
        auto cm = clocks_.find(dev.device_id);
        std::vector<CapturedSample> batch;
        batch.reserve(samples.size());
        for (const auto& s : samples) {
            if (s.payload.size() != timebase::payload_arity(s.modality))
                throw ValidationError("payload arity mismatch for " + std::string(timebase::to_string(s.modality)));
            Timestamp corrected = s.corrected_ts.value_or(s.local_ts);
            if (!s.corrected_ts && cm != clocks_.end()) corrected = timebase::correct_timestamp(s.local_ts, cm->second);
            batch.push_back({cid, dev.device_id, s.modality, s.local_ts, corrected, dev.location, s.payload});
        }
        for (const auto& b : batch) {
            storage_.append(kStream, to_json(b));
            index(b);
        }
        registry_.log_data_access({{"device_id", dev.device_id}, {"capture_id", cid}, {"count", batch.size()}});
        return cid;
    }

    /// Samples with corrected_ts in [from, to), ordered by corrected_ts.
    std::vector<CapturedSample> query(const std::string& device_id, Timestamp from, Timestamp to) const {
        std::lock_guard lock(mu_);
        std::vector<CapturedSample> out;
        auto it = by_device_.find(device_id);
        if (it == by_device_.end()) return out;
        const auto& v = it->second;
        auto lo = std::lower_bound(v.begin(), v.end(), from, [](const CapturedSample& s, Timestamp t) { return s.corrected_ts < t; });
        for (; lo != v.end() && lo->corrected_ts < to; ++lo) out.push_back(*lo);
        return out;
    }

    std::vector<CapturedSample> all() const {
        std::lock_guard lock(mu_);
        std::vector<CapturedSample> out;
        for (const auto& [id, v] : by_device_) out.insert(out.end(), v.begin(), v.end());
        return out;
    }

private:
    // Stable insertion keeps arrival order among equal timestamps.
    void index(const CapturedSample& s) {
        auto& v = by_device_[s.device_id];
        auto pos = std::upper_bound(v.begin(), v.end(), s.corrected_ts,
                                    [](Timestamp t, const CapturedSample& x) { return t < x.corrected_ts; });
        v.insert(pos, s);
    }

    Registry& registry_;
    Storage& storage_;
    IdGenerator& ids_;
    std::map<std::string, timebase::ClockModel> clocks_;
    std::map<std::string, std::vector<CapturedSample>> by_device_;
    mutable std::mutex mu_;
};

}  // namespace sass::services
