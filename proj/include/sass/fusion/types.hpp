#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sass/error.hpp"
#include "sass/time.hpp"

namespace sass::fusion {

enum class ObjectClass { pedestrian, vehicle };

inline constexpr ObjectClass kAllClasses[] = {ObjectClass::pedestrian, ObjectClass::vehicle};

inline std::string to_string(ObjectClass c) { return c == ObjectClass::pedestrian ? "pedestrian" : "vehicle"; }

inline ObjectClass parse_class(const std::string& s) {
    if (s == "pedestrian") return ObjectClass::pedestrian;
    if (s == "vehicle") return ObjectClass::vehicle;
    throw ValidationError("unknown object class: " + s);
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// `center` is the bounding-box bottom-centre: the ground contact point.
struct Detection {
    std::string camera_id;
    ObjectClass cls = ObjectClass::pedestrian;
    Point2 center;
    double confidence = 1.0;
    Timestamp frame_ts{};

    void validate() const {
        if (!(confidence >= 0.0 && confidence <= 1.0)) throw ValidationError("confidence outside [0,1]");
        if (!std::isfinite(center.x) || !std::isfinite(center.y)) throw ValidationError("non-finite detection center");
    }
};

struct PointPair {
    Point2 source;
    Point2 target;
};

struct FusedDetection {
    ObjectClass cls = ObjectClass::pedestrian;
    Point2 center;  // top view, meters
    double confidence = 0.0;
    std::vector<std::string> cameras;  // sorted, unique
    Timestamp frame_ts{};
    double threshold = 0.0;
    std::size_t merge_count = 1;
};

inline nlohmann::json to_json(const Detection& d) {
    return {{"camera_id", d.camera_id}, {"class", to_string(d.cls)}, {"x", d.center.x},
            {"y", d.center.y},           {"confidence", d.confidence}, {"frame_ts_ns", d.frame_ts.ns}};
}

inline Detection detection_from_json(const nlohmann::json& j) {
    try {
        Detection d{j.at("camera_id").get<std::string>(), parse_class(j.at("class").get<std::string>()),
                    {j.at("x").get<double>(), j.at("y").get<double>()}, j.at("confidence").get<double>(),
                    Timestamp{j.at("frame_ts_ns").get<std::int64_t>()}};
        d.validate();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad detection record: ") + e.what());
    }
}

inline nlohmann::json to_json(const PointPair& p) {
    return {{"sx", p.source.x}, {"sy", p.source.y}, {"tx", p.target.x}, {"ty", p.target.y}};
}

inline PointPair pair_from_json(const nlohmann::json& j) {
    try {
        return {{j.at("sx").get<double>(), j.at("sy").get<double>()}, {j.at("tx").get<double>(), j.at("ty").get<double>()}};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad point pair: ") + e.what());
    }
}

inline nlohmann::json to_json(const FusedDetection& f) {
    return {{"class", to_string(f.cls)},
            {"x", f.center.x},
            {"y", f.center.y},
            {"confidence", f.confidence},
            {"cameras", f.cameras},
            {"frame_ts_ns", f.frame_ts.ns},
            {"fusion", {{"threshold_m", f.threshold}, {"merge_count", f.merge_count}}}};
}

template <class T>
void write_ndjson(std::ostream& os, const std::vector<T>& items) {
    for (const auto& x : items) os << to_json(x).dump() << '\n';
}

template <class F>
auto read_ndjson(std::istream& is, F&& parse) {
    std::vector<decltype(parse(nlohmann::json{}))> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(std::string("malformed NDJSON line: ") + e.what());
        }
        out.push_back(parse(j));
    }
    return out;
}

}  // namespace sass::fusion
