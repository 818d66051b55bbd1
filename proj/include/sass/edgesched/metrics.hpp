#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sass/edgesched/simulator.hpp"
#include "sass/error.hpp"

namespace sass::edgesched {

struct ClassMetrics {
    std::size_t completed = 0;
    std::size_t dispatched = 0;
    double mean_latency_ms = 0.0;   // entry -> completion
    double mean_wait_ms = 0.0;      // entry -> selection
    double wait_variance_ms2 = 0.0;
    double wait_std_ms = 0.0;
};

struct SimMetrics {
    double duration_s = 0.0;
    double throughput = 0.0;  // completions per second
    std::map<double, ClassMetrics> per_priority;  // keyed by P_initial
    double inversion_rate = 0.0;
    double offload_fraction = 0.0;
    std::size_t arrived = 0;
    std::size_t dispatched = 0;
    std::size_t completed = 0;
    std::size_t redirected = 0;
    std::size_t in_service_at_end = 0;
    std::size_t queued_at_end = 0;
    std::size_t cycles = 0;
    // Wall-clock scheduler cost; only present when overhead samples are supplied.
    std::optional<double> overhead_ms_per_cycle;
    std::optional<double> overhead_ms_max;
};

/// Replays an event log. Throws IntegrityError on truncated or inconsistent logs.
inline SimMetrics compute_metrics(std::istream& log, const std::vector<double>* overhead_ms = nullptr) {
    struct Life {
        double p = 0.0;
        std::int64_t entry = 0;
        std::string node;
        std::optional<std::int64_t> dispatch, done;
    };
    std::map<std::string, NodeKind> kinds;
    std::map<TaskId, Life> tasks;
    std::map<std::string, std::multiset<double>> waiting;  // P_initial of queued tasks per node
    SimMetrics m;
    std::size_t medium_dispatches = 0, inversions = 0, offloaded = 0;
    bool ended = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(log, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (ended) throw IntegrityError("records after end marker");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw IntegrityError("unparseable log line " + std::to_string(lineno));
        }
        const auto ev = j.at("event").get<std::string>();
        const std::int64_t t = j.at("t_ns").get<std::int64_t>();
        if (ev == "node") {
            kinds[j.at("node_id").get<std::string>()] = parse_node_kind(j.at("kind").get<std::string>());
        } else if (ev == "arrive") {
            const TaskId id = j.at("task_id").get<TaskId>();
            Life l{j.at("p_eff").get<double>(), t, j.at("node_id").get<std::string>(), {}, {}};
            if (!kinds.count(l.node)) throw IntegrityError("arrival on undeclared node " + l.node);
            if (!tasks.emplace(id, l).second) throw IntegrityError("duplicate arrival for task " + std::to_string(id));
            waiting[l.node].insert(l.p);
            ++m.arrived;
            m.redirected += j.value("redirected", false);
        } else if (ev == "dispatch") {
            const TaskId id = j.at("task_id").get<TaskId>();
            auto it = tasks.find(id);
            if (it == tasks.end() || it->second.dispatch) throw IntegrityError("dispatch without pending arrival: " + std::to_string(id));
            auto& l = it->second;
            l.dispatch = t;
            auto& q = waiting[l.node];
            q.erase(q.find(l.p));
            ++m.dispatched;
            if (kinds.at(l.node) == NodeKind::medium) {
                ++medium_dispatches;
                if (!q.empty() && *q.begin() < l.p) ++inversions;
            } else {
                ++offloaded;
            }
        } else if (ev == "complete") {
            const TaskId id = j.at("task_id").get<TaskId>();
            auto it = tasks.find(id);
            if (it == tasks.end() || !it->second.dispatch || it->second.done)
                throw IntegrityError("completion without dispatch: " + std::to_string(id));
            it->second.done = t;
            ++m.completed;
        } else if (ev == "end") {
            ended = true;
            m.duration_s = static_cast<double>(t) * 1e-9;
            m.cycles = j.value("cycles", std::size_t{0});
        } else {
            throw IntegrityError("unknown event kind: " + ev);
        }
    }
    if (!ended) throw IntegrityError("event log truncated: no end marker");
    if (!(m.duration_s > 0.0)) throw IntegrityError("end marker has no positive duration");

    std::map<double, std::vector<double>> waits;
    std::map<double, double> latency_sum;
    for (const auto& [id, l] : tasks) {
        if (!l.dispatch) {
            ++m.queued_at_end;
            continue;
        }
        auto& c = m.per_priority[l.p];
        ++c.dispatched;
        waits[l.p].push_back(static_cast<double>(*l.dispatch - l.entry) * 1e-6);
        if (l.done) {
            ++c.completed;
            latency_sum[l.p] += static_cast<double>(*l.done - l.entry) * 1e-6;
        } else {
            ++m.in_service_at_end;
        }
    }
    for (auto& [p, c] : m.per_priority) {
        const auto& w = waits[p];
        double mean = 0.0;
        for (double x : w) mean += x;
        mean /= static_cast<double>(w.size());
        double var = 0.0;
        for (double x : w) var += (x - mean) * (x - mean);
        var /= static_cast<double>(w.size());
        c.mean_wait_ms = mean;
        c.wait_variance_ms2 = var;
        c.wait_std_ms = std::sqrt(var);
        c.mean_latency_ms = c.completed ? latency_sum[p] / static_cast<double>(c.completed) : 0.0;
    }
    m.throughput = static_cast<double>(m.completed) / m.duration_s;
    m.inversion_rate = medium_dispatches ? static_cast<double>(inversions) / static_cast<double>(medium_dispatches) : 0.0;
    m.offload_fraction = m.dispatched ? static_cast<double>(offloaded) / static_cast<double>(m.dispatched) : 0.0;
    if (overhead_ms && !overhead_ms->empty()) {
        double s = 0.0, mx = 0.0;
        for (double x : *overhead_ms) {
            s += x;
            mx = std::max(mx, x);
        }
        m.overhead_ms_per_cycle = s / static_cast<double>(overhead_ms->size());
        m.overhead_ms_max = mx;
    }
    return m;
}

inline SimMetrics compute_metrics(const std::string& log, const std::vector<double>* overhead_ms = nullptr) {
    std::istringstream is(log);
    return compute_metrics(is, overhead_ms);
}

inline std::string priority_label(double p) {
    std::ostringstream os;
    os << "p" << p;
    return os.str();
}

inline nlohmann::json to_json(const SimMetrics& m) {
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [p, c] : m.per_priority)
        classes[priority_label(p)] = {{"initial_priority", p},
                                      {"completed", c.completed},
                                      {"dispatched", c.dispatched},
                                      {"mean_latency_ms", c.mean_latency_ms},
                                      {"mean_wait_ms", c.mean_wait_ms},
                                      {"wait_variance_ms2", c.wait_variance_ms2},
                                      {"wait_std_ms", c.wait_std_ms}};
    nlohmann::json j{{"duration_s", m.duration_s},
                     {"throughput_tasks_per_s", m.throughput},
                     {"per_priority", classes},
                     {"priority_inversion_rate", m.inversion_rate},
                     {"offload_fraction", m.offload_fraction},
                     {"arrived", m.arrived},
                     {"dispatched", m.dispatched},
                     {"completed", m.completed},
                     {"redirected", m.redirected},
                     {"in_service_at_end", m.in_service_at_end},
                     {"queued_at_end", m.queued_at_end},
                     {"cycles", m.cycles}};
    j["overhead_ms_per_cycle"] = m.overhead_ms_per_cycle ? nlohmann::json(*m.overhead_ms_per_cycle) : nlohmann::json(nullptr);
    j["overhead_ms_max"] = m.overhead_ms_max ? nlohmann::json(*m.overhead_ms_max) : nlohmann::json(nullptr);
    return j;
}

inline void write_metrics_csv(std::ostream& os, const SimMetrics& m) {
    os << "metric,priority,value\n";
    os << "throughput_tasks_per_s,," << m.throughput << '\n';
    os << "priority_inversion_rate,," << m.inversion_rate << '\n';
    os << "offload_fraction,," << m.offload_fraction << '\n';
    if (m.overhead_ms_per_cycle) os << "overhead_ms_per_cycle,," << *m.overhead_ms_per_cycle << '\n';
    for (const auto& [p, c] : m.per_priority) {
        os << "mean_latency_ms," << p << ',' << c.mean_latency_ms << '\n';
        os << "mean_wait_ms," << p << ',' << c.mean_wait_ms << '\n';
        os << "wait_variance_ms2," << p << ',' << c.wait_variance_ms2 << '\n';
    }
}

}  // namespace sass::edgesched
