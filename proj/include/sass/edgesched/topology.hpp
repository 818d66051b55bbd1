#pragma once

#include <deque>
#include <string>
#include <vector>

#include <json.hpp>

#include "sass/edgesched/task.hpp"
#include "sass/error.hpp"

namespace sass::edgesched {

enum class NodeKind { medium, computation_unit };

inline std::string to_string(NodeKind k) { return k == NodeKind::medium ? "medium" : "computation_unit"; }

inline NodeKind parse_node_kind(const std::string& s) {
    if (s == "medium") return NodeKind::medium;
    if (s == "computation_unit") return NodeKind::computation_unit;
    throw ConfigError("unknown node kind: " + s);
}

struct NodeSpec {
    std::string id;
    NodeKind kind = NodeKind::medium;
    std::size_t capacity = 1;
};

struct TopologySpec {
    std::vector<NodeSpec> nodes;
    double overload_threshold = 0.8;   // medium-node utilisation above which light work is redirected
    Duration batch_window = milliseconds(100);
    Duration monitor_window = std::chrono::seconds(1);

    void validate() const {
        if (nodes.empty()) throw ConfigError("topology has no nodes");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].capacity < 1) throw ConfigError("node capacity must be at least 1: " + nodes[i].id);
            for (std::size_t j = 0; j < i; ++j)
                if (nodes[j].id == nodes[i].id) throw ConfigError("duplicate node id: " + nodes[i].id);
        }
        if (!(overload_threshold >= 0.0)) throw ConfigError("overload threshold must be >= 0");
        if (batch_window <= Duration::zero()) throw ConfigError("batch window must be positive");
        if (monitor_window <= Duration::zero()) throw ConfigError("monitor window must be positive");
    }
};

/// Point-in-time view of one node as seen by the resource monitor.
struct NodeState {
    std::string node_id;
    NodeKind kind = NodeKind::medium;
    std::size_t capacity = 1;
    std::size_t busy_slots = 0;
    std::size_t queue_length = 0;
    double utilization = 0.0;  // busy slot-time fraction over the monitor window
    double overload_threshold = 0.8;
};

struct Route {
    std::size_t node = 0;  // index into the snapshot
    bool redirected = false;
};

namespace detail {

inline std::optional<std::size_t> least_utilized(const std::vector<NodeState>& nodes, NodeKind kind) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].kind != kind) continue;
        if (!best || nodes[i].utilization < nodes[*best].utilization ||
            (nodes[i].utilization == nodes[*best].utilization && nodes[i].queue_length < nodes[*best].queue_length))
            best = i;
    }
    return best;
}

}  // namespace detail

/// Light work goes to the least-utilised medium node unless that node is over
/// its overload threshold; heavy and redirected work goes to a computation unit.
inline Route classify_and_route(const Task& task, const std::vector<NodeState>& nodes) {
    if (task.compute_class == ComputeClass::light) {
        const auto m = detail::least_utilized(nodes, NodeKind::medium);
        if (!m) throw TopologyError("no medium node for light task " + std::to_string(task.id));
        if (!(nodes[*m].utilization > nodes[*m].overload_threshold)) return {*m, false};
        const auto c = detail::least_utilized(nodes, NodeKind::computation_unit);
        if (!c) return {*m, false};  // nowhere to redirect; keep it local
        return {*c, true};
    }
    const auto c = detail::least_utilized(nodes, NodeKind::computation_unit);
    if (!c) throw TopologyError("no computation unit for heavy task " + std::to_string(task.id));
    return {*c, false};
}

/// Sliding-window utilisation tracker over integer-ns busy slot-time.
class UtilizationWindow {
public:
    void advance(Timestamp now, std::size_t busy_slots_before) {
        integral_ += static_cast<long double>(busy_slots_before) * static_cast<long double>((now - last_).count());
        last_ = now;
    }
    double sample(Timestamp now, Duration window, std::size_t capacity) {
        history_.emplace_back(now, integral_);
        while (history_.size() > 1 && history_[1].first <= now - window) history_.pop_front();
        const auto& [t0, i0] = history_.front();
        const auto span = (now - t0).count();
        if (span <= 0) return 0.0;
        const long double u = (integral_ - i0) / (static_cast<long double>(capacity) * span);
        return std::clamp(static_cast<double>(u), 0.0, 1.0);
    }

private:
    Timestamp last_{};
    long double integral_ = 0.0L;
    std::deque<std::pair<Timestamp, long double>> history_{{Timestamp{0}, 0.0L}};
};

inline nlohmann::json to_json(const TopologySpec& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"capacity", n.capacity}});
    return {{"nodes", nodes},
            {"overload_threshold", t.overload_threshold},
            {"batch_window_ms", to_seconds(t.batch_window) * 1e3},
            {"monitor_window_ms", to_seconds(t.monitor_window) * 1e3}};
}

inline TopologySpec topology_from_json(const nlohmann::json& j) {
    TopologySpec t;
    try {
        for (const auto& n : j.at("nodes"))
            t.nodes.push_back({n.at("id").get<std::string>(), parse_node_kind(n.at("kind").get<std::string>()),
                               n.value("capacity", std::size_t{1})});
        t.overload_threshold = j.value("overload_threshold", t.overload_threshold);
        if (j.contains("batch_window_ms")) t.batch_window = from_seconds(j.at("batch_window_ms").get<double>() / 1e3);
        if (j.contains("monitor_window_ms")) t.monitor_window = from_seconds(j.at("monitor_window_ms").get<double>() / 1e3);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad topology spec: ") + e.what());
    }
    t.validate();
    return t;
}

}  // namespace sass::edgesched
