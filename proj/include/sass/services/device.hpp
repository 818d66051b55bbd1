#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sass/error.hpp"
#include "sass/services/clock.hpp"
#include "sass/services/storage.hpp"
#include "sass/time.hpp"

namespace sass::services {

enum class DeviceType { sensor, actuator };
enum class DeviceStatus { online, offline, maintenance };

inline std::string to_string(DeviceType t) { return t == DeviceType::sensor ? "sensor" : "actuator"; }

inline std::string to_string(DeviceStatus s) {
    switch (s) {
        case DeviceStatus::online: return "online";
        case DeviceStatus::offline: return "offline";
        case DeviceStatus::maintenance: return "maintenance";
    }
    return "?";
}

inline DeviceStatus parse_status(const std::string& s) {
    if (s == "online") return DeviceStatus::online;
    if (s == "offline") return DeviceStatus::offline;
    if (s == "maintenance") return DeviceStatus::maintenance;
    throw ValidationError("unknown status: " + s);
}

struct Location {
    double latitude = 0.0;
    double longitude = 0.0;
    std::string description;
    bool operator==(const Location&) const = default;
};

struct AccessMethods {
    std::string api_endpoint;
    std::string protocols;
    bool operator==(const AccessMethods&) const = default;
};

struct DeviceRecord {
    std::string device_id;
    DeviceType type = DeviceType::sensor;
    Location location;
    std::vector<std::string> capabilities;
    std::string data_format;
    AccessMethods access_methods;
    DeviceStatus status = DeviceStatus::online;
    Timestamp last_sync_timestamp{};
    Timestamp registration_timestamp{};
    std::string owner;
    bool operator==(const DeviceRecord&) const = default;
};

inline bool valid_device_id(const std::string& id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
    return true;
}

inline ojson to_json(const DeviceRecord& d) {
    ojson j;
    j["device_id"] = d.device_id;
    j["type"] = to_string(d.type);
    j["location"] = {{"latitude", d.location.latitude},
                     {"longitude", d.location.longitude},
                     {"description", d.location.description}};
    j["capabilities"] = d.capabilities;
    j["data_format"] = d.data_format;
    j["access_methods"] = {{"api_endpoint", d.access_methods.api_endpoint},
                           {"protocols", d.access_methods.protocols}};
    j["status"] = to_string(d.status);
    j["last_sync_timestamp"] = format_iso(d.last_sync_timestamp);
    j["registration_timestamp"] = format_iso(d.registration_timestamp);
    j["owner"] = d.owner;
    return j;
}

/// Parses a record, collecting every problem before failing so the error lists
/// all offending fields. Timestamps and status are optional (the registry
/// fills them in); everything else is required.
inline DeviceRecord device_from_json(const ojson& j) {
    std::vector<std::string> bad;
    DeviceRecord d;
    if (!j.is_object()) throw ValidationError("device record must be an object");

    auto str = [&](const ojson& obj, const char* key, const std::string& path, std::string& out) {
        if (!obj.is_object() || !obj.contains(key)) return bad.push_back(path + " missing");
        if (!obj[key].is_string()) return bad.push_back(path + " must be a string");
        out = obj[key].get<std::string>();
    };
    auto num = [&](const ojson& obj, const char* key, const std::string& path, double& out, double lim) {
        if (!obj.is_object() || !obj.contains(key)) return bad.push_back(path + " missing");
        if (!obj[key].is_number()) return bad.push_back(path + " must be a number");
        out = obj[key].get<double>();
        if (!(std::abs(out) <= lim)) bad.push_back(path + " out of range");
    };
    auto ts = [&](const char* key, Timestamp& out) {
        if (!j.contains(key)) return;
        try {
            out = parse_iso(j[key].get<std::string>());
        } catch (const std::exception&) {
            bad.push_back(std::string(key) + " is not an ISO-8601 timestamp");
        }
    };

    str(j, "device_id", "device_id", d.device_id);
    if (j.contains("device_id") && j["device_id"].is_string() && !valid_device_id(d.device_id))
        bad.push_back("device_id has invalid characters");

    std::string type;
    str(j, "type", "type", type);
    if (type == "sensor") d.type = DeviceType::sensor;
    else if (type == "actuator") d.type = DeviceType::actuator;
    else if (!type.empty()) bad.push_back("type must be sensor or actuator");

    if (!j.contains("location") || !j["location"].is_object()) {
        bad.push_back("location missing");
    } else {
        num(j["location"], "latitude", "location.latitude", d.location.latitude, 90.0);
        num(j["location"], "longitude", "location.longitude", d.location.longitude, 180.0);
        if (j["location"].contains("description")) str(j["location"], "description", "location.description", d.location.description);
    }

    if (!j.contains("capabilities") || !j["capabilities"].is_array()) {
        bad.push_back("capabilities missing");
    } else {
        for (const auto& c : j["capabilities"]) {
            if (!c.is_string()) {
                bad.push_back("capabilities must be strings");
                break;
            }
            d.capabilities.push_back(c.get<std::string>());
        }
    }

    str(j, "data_format", "data_format", d.data_format);
    if (!j.contains("access_methods") || !j["access_methods"].is_object()) {
        bad.push_back("access_methods missing");
    } else {
        str(j["access_methods"], "api_endpoint", "access_methods.api_endpoint", d.access_methods.api_endpoint);
        str(j["access_methods"], "protocols", "access_methods.protocols", d.access_methods.protocols);
    }

    if (j.contains("status")) {
        try {
            d.status = parse_status(j["status"].get<std::string>());
        } catch (const std::exception&) {
            bad.push_back("status must be online, offline or maintenance");
        }
    }
    ts("last_sync_timestamp", d.last_sync_timestamp);
    ts("registration_timestamp", d.registration_timestamp);
    str(j, "owner", "owner", d.owner);

    if (!bad.empty()) {
        std::string msg = "invalid device record:";
        for (const auto& b : bad) msg += " " + b + ";";
        msg.pop_back();
        throw ValidationError(msg);
    }
    return d;
}

struct VersionSnapshot {
    std::string version_id;
    std::string device_id;
    ojson config;
    Timestamp created_at{};
};

inline ojson to_json(const VersionSnapshot& v) {
    return {{"version_id", v.version_id},
            {"device_id", v.device_id},
            {"config", v.config},
            {"created_at", format_iso(v.created_at)}};
}

struct ActivityLogEntry {
    Timestamp timestamp{};
    std::string activity_type;
    ojson details;
};

inline const std::vector<std::string>& activity_types() {
    static const std::vector<std::string> t{"register", "update", "rollback", "action", "data_access"};
    return t;
}

inline ojson to_json(const ActivityLogEntry& e) {
    return {{"timestamp", format_iso(e.timestamp)}, {"activity_type", e.activity_type}, {"details", e.details}};
}

inline ActivityLogEntry entry_from_json(const ojson& j) {
    try {
        ActivityLogEntry e{parse_iso(j.at("timestamp").get<std::string>()), j.at("activity_type").get<std::string>(),
                           j.at("details")};
        if (std::find(activity_types().begin(), activity_types().end(), e.activity_type) == activity_types().end())
            throw IntegrityError("unknown activity type: " + e.activity_type);
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw IntegrityError(std::string("malformed log entry: ") + ex.what());
    } catch (const ValidationError& ex) {
        throw IntegrityError(std::string("malformed log entry: ") + ex.what());
    }
}

}  // namespace sass::services
