#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sass/edgesched/task.hpp"
#include "sass/error.hpp"

namespace sass::edgesched {

enum class ArrivalProcess { periodic, poisson };

/// One pipeline stage emitting tasks at `rate_hz`. Service demand is drawn
/// uniformly in service_demand * [1 - jitter, 1 + jitter].
struct StageSpec {
    std::string name;
    ComputeClass compute_class = ComputeClass::light;
    double rate_hz = 1.0;
    Duration service_demand = milliseconds(10);
    double demand_jitter = 0.0;
    double high_priority_fraction = 1.0;  // share of tasks given the high (urgent) initial priority
};

struct WorkloadSpec {
    std::vector<StageSpec> stages;
    ArrivalProcess arrival = ArrivalProcess::periodic;
    double high_priority = 0.0;
    double low_priority = 1.0;

    void validate() const {
        if (stages.empty()) throw ConfigError("workload has no stages");
        for (const auto& s : stages) {
            if (!(s.rate_hz > 0.0) || !std::isfinite(s.rate_hz)) throw ConfigError("stage rate must be positive: " + s.name);
            if (s.service_demand <= Duration::zero()) throw ConfigError("service demand must be positive: " + s.name);
            if (!(s.demand_jitter >= 0.0 && s.demand_jitter < 1.0)) throw ConfigError("demand jitter outside [0,1): " + s.name);
            if (!(s.high_priority_fraction >= 0.0 && s.high_priority_fraction <= 1.0))
                throw ConfigError("high-priority fraction outside [0,1]: " + s.name);
        }
    }

    double arrival_rate() const {
        double r = 0.0;
        for (const auto& s : stages) r += s.rate_hz;
        return r;
    }
};

inline nlohmann::json to_json(const WorkloadSpec& w) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : w.stages)
        stages.push_back({{"name", s.name},
                          {"class", to_string(s.compute_class)},
                          {"rate_hz", s.rate_hz},
                          {"service_ms", to_seconds(s.service_demand) * 1e3},
                          {"demand_jitter", s.demand_jitter},
                          {"high_priority_fraction", s.high_priority_fraction}});
    return {{"stages", stages},
            {"arrival", w.arrival == ArrivalProcess::periodic ? "periodic" : "poisson"},
            {"high_priority", w.high_priority},
            {"low_priority", w.low_priority}};
}

inline WorkloadSpec workload_from_json(const nlohmann::json& j) {
    WorkloadSpec w;
    try {
        for (const auto& s : j.at("stages")) {
            StageSpec st;
            st.name = s.at("name").get<std::string>();
            st.compute_class = parse_compute_class(s.at("class").get<std::string>());
            st.rate_hz = s.at("rate_hz").get<double>();
            st.service_demand = from_seconds(s.at("service_ms").get<double>() / 1e3);
            st.demand_jitter = s.value("demand_jitter", 0.0);
            st.high_priority_fraction = s.value("high_priority_fraction", 1.0);
            w.stages.push_back(st);
        }
        const auto arrival = j.value("arrival", std::string("periodic"));
        if (arrival == "periodic") w.arrival = ArrivalProcess::periodic;
        else if (arrival == "poisson") w.arrival = ArrivalProcess::poisson;
        else throw ConfigError("unknown arrival process: " + arrival);
        w.high_priority = j.value("high_priority", 0.0);
        w.low_priority = j.value("low_priority", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad workload spec: ") + e.what());
    }
    w.validate();
    return w;
}

}  // namespace sass::edgesched
