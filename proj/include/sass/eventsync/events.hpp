#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sass/error.hpp"
#include "sass/time.hpp"

namespace sass::eventsync {

enum class Stage { coarse, fine };

struct EventDetection {
    std::string stream_id;
    Timestamp start{};
    Timestamp end{};
    double score = 0.0;
    Stage stage = Stage::coarse;
};

inline nlohmann::json to_json(const EventDetection& e) {
    return {{"stream_id", e.stream_id},
            {"start_ns", e.start.ns},
            {"end_ns", e.end.ns},
            {"score", e.score},
            {"stage", e.stage == Stage::coarse ? "coarse" : "fine"}};
}

inline EventDetection event_from_json(const nlohmann::json& j) {
    EventDetection e;
    e.stream_id = j.at("stream_id").get<std::string>();
    e.start = Timestamp{j.at("start_ns").get<std::int64_t>()};
    e.end = Timestamp{j.at("end_ns").get<std::int64_t>()};
    e.score = j.at("score").get<double>();
    const auto stage = j.at("stage").get<std::string>();
    if (stage != "coarse" && stage != "fine") throw ValidationError("unknown event stage: " + stage);
    e.stage = stage == "coarse" ? Stage::coarse : Stage::fine;
    if (e.end < e.start) throw ValidationError("event ends before it starts");
    return e;
}

inline void write_events(std::ostream& os, const std::vector<EventDetection>& events) {
    for (const auto& e : events) os << to_json(e).dump() << '\n';
}

inline std::vector<EventDetection> read_events(std::istream& is) {
    std::vector<EventDetection> out;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) out.push_back(event_from_json(nlohmann::json::parse(line)));
    return out;
}

}  // namespace sass::eventsync
