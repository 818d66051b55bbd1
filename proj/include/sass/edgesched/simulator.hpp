#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "sass/edgesched/task.hpp"
#include "sass/edgesched/topology.hpp"
#include "sass/edgesched/workload.hpp"
#include "sass/error.hpp"

namespace sass::edgesched {

/// Counters kept while the simulation runs; compute_metrics recomputes the
/// same quantities from the log alone.
struct SimCounters {
    std::size_t arrived = 0;
    std::size_t dispatched = 0;
    std::size_t completed = 0;
    std::size_t redirected = 0;
    std::size_t offloaded = 0;  // dispatches on computation units
    std::size_t inversions = 0;
    std::size_t medium_dispatches = 0;
    std::size_t cycles = 0;
};

struct SimResult {
    std::string event_log;  // NDJSON, deterministic given (specs, seed)
    SimCounters counters;
    std::vector<double> cycle_overhead_ms;  // wall-clock, not part of the log
    std::vector<NodeState> final_snapshot;
};

namespace detail {

enum EventType : int { completion = 0, arrival = 1, cycle = 2, batch = 3 };

struct NodeRuntime {
    NodeSpec spec;
    std::vector<Task> queue;
    std::size_t busy = 0;
    UtilizationWindow util;
};

class EventLog {
public:
    void record(Timestamp t, const char* event, std::optional<TaskId> task, const std::string& node,
                std::optional<double> p_eff, nlohmann::json extra = nlohmann::json::object()) {
        extra["t_ns"] = t.ns;
        extra["event"] = event;
        extra["task_id"] = task ? nlohmann::json(*task) : nlohmann::json(nullptr);
        extra["node_id"] = node.empty() ? nlohmann::json(nullptr) : nlohmann::json(node);
        extra["p_eff"] = p_eff ? nlohmann::json(*p_eff) : nlohmann::json(nullptr);
        out_ << extra.dump() << '\n';
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

}  // namespace detail

inline SimResult run_simulation(const WorkloadSpec& workload, const TopologySpec& topology, const SchedulerConfig& cfg,
                                std::uint64_t seed, Duration duration) {
    workload.validate();
    topology.validate();
    cfg.validate();
    if (duration <= Duration::zero()) throw ConfigError("simulation duration must be positive");

    using detail::EventType;
    const Timestamp end{duration.count()};
    SimResult res;
    detail::EventLog log;
    std::vector<detail::NodeRuntime> nodes;
    std::vector<NodeState> snapshot;
    for (const auto& n : topology.nodes) {
        nodes.push_back({n, {}, 0, {}});
        snapshot.push_back({n.id, n.kind, n.capacity, 0, 0, 0.0, topology.overload_threshold});
        log.record(Timestamp{0}, "node", std::nullopt, n.id, std::nullopt,
                   {{"kind", to_string(n.kind)}, {"capacity", n.capacity}});
    }

    // (time, type, sequence, payload): payload is a stage index for arrivals
    // and a node index for completions.
    using Event = std::tuple<std::int64_t, int, std::uint64_t, std::size_t, TaskId>;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
    std::uint64_t seq = 0;

    std::vector<std::mt19937_64> rngs;
    std::vector<std::int64_t> periodic_k(workload.stages.size(), 0);
    std::vector<double> phase(workload.stages.size(), 0.0);
    for (std::size_t s = 0; s < workload.stages.size(); ++s) {
        std::seed_seq ss{seed, static_cast<std::uint64_t>(s), std::uint64_t{0x5eed}};
        rngs.emplace_back(ss);
    }
    auto next_arrival = [&](std::size_t s, double prev_s) {
        const auto& st = workload.stages[s];
        const double period = 1.0 / st.rate_hz;
        if (workload.arrival == ArrivalProcess::periodic) {
            if (periodic_k[s] == 0) phase[s] = std::uniform_real_distribution<double>(0.0, period)(rngs[s]);
            return phase[s] + static_cast<double>(periodic_k[s]++) * period;
        }
        return prev_s + std::exponential_distribution<double>(st.rate_hz)(rngs[s]);
    };
    std::vector<double> last_arrival(workload.stages.size(), 0.0);
    for (std::size_t s = 0; s < workload.stages.size(); ++s) {
        last_arrival[s] = next_arrival(s, 0.0);
        events.emplace(Timestamp::from_seconds(last_arrival[s]).ns, EventType::arrival, seq++, s, 0);
    }
    events.emplace(0, EventType::cycle, seq++, 0, 0);
    events.emplace(0, EventType::batch, seq++, 0, 0);

    std::map<TaskId, Task> in_service;
    TaskId next_id = 1;

    auto start_task = [&](std::size_t ni, Task t, Timestamp now) {
        auto& n = nodes[ni];
        n.util.advance(now, n.busy);
        ++n.busy;
        ++res.counters.dispatched;
        if (n.spec.kind == NodeKind::computation_unit) ++res.counters.offloaded;
        log.record(now, "dispatch", t.id, n.spec.id, compute_priority(t, now, cfg));
        events.emplace((now + t.service_demand).ns, EventType::completion, seq++, ni, t.id);
        in_service.emplace(t.id, std::move(t));
    };

    while (!events.empty()) {
        const auto [t_ns, type, order, idx, task_id] = events.top();
        (void)order;
        if (t_ns >= end.ns) break;
        events.pop();
        const Timestamp now{t_ns};
        switch (type) {
            case EventType::completion: {
                auto& n = nodes[idx];
                n.util.advance(now, n.busy);
                --n.busy;
                ++res.counters.completed;
                in_service.erase(task_id);
                log.record(now, "complete", task_id, n.spec.id, std::nullopt);
                break;
            }
            case EventType::arrival: {
                const auto& st = workload.stages[idx];
                auto& rng = rngs[idx];
                Task t;
                t.id = next_id++;
                t.stage = st.name;
                t.compute_class = st.compute_class;
                t.initial_priority = std::bernoulli_distribution(st.high_priority_fraction)(rng) ? workload.high_priority
                                                                                                  : workload.low_priority;
                t.entry_time = now;
                double factor = 1.0;
                if (st.demand_jitter > 0.0)
                    factor = std::uniform_real_distribution<double>(1.0 - st.demand_jitter, 1.0 + st.demand_jitter)(rng);
                t.service_demand = std::max(Duration{1}, from_seconds(to_seconds(st.service_demand) * factor));
                const Route r = classify_and_route(t, snapshot);
                ++res.counters.arrived;
                res.counters.redirected += r.redirected;
                log.record(now, "arrive", t.id, nodes[r.node].spec.id, t.initial_priority,
                           {{"stage", t.stage},
                            {"class", to_string(t.compute_class)},
                            {"service_ns", t.service_demand.count()},
                            {"redirected", r.redirected}});
                nodes[r.node].queue.push_back(std::move(t));
                last_arrival[idx] = next_arrival(idx, last_arrival[idx]);
                events.emplace(Timestamp::from_seconds(last_arrival[idx]).ns, EventType::arrival, seq++, idx, 0);
                break;
            }
            case EventType::cycle: {
                ++res.counters.cycles;
                // Monitor refresh: routing until the next cycle sees these values.
                for (std::size_t i = 0; i < nodes.size(); ++i) {
                    auto& n = nodes[i];
                    n.util.advance(now, n.busy);
                    snapshot[i].utilization = n.util.sample(now, topology.monitor_window, n.spec.capacity);
                    snapshot[i].busy_slots = n.busy;
                    snapshot[i].queue_length = n.queue.size();
                }
                double spent_ms = 0.0;
                for (std::size_t i = 0; i < nodes.size(); ++i) {
                    auto& n = nodes[i];
                    if (n.spec.kind != NodeKind::medium || n.queue.empty()) continue;
                    const auto t0 = std::chrono::steady_clock::now();
                    auto picked = schedule_cycle(n.queue, n.spec.capacity - n.busy, now, cfg);
                    spent_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                    for (std::size_t k = 0; k < picked.size(); ++k) {
                        // Inversion: a more urgent P_initial is still waiting when this task goes.
                        ++res.counters.medium_dispatches;
                        bool inverted = false;
                        for (const auto& w : n.queue) inverted = inverted || w.initial_priority < picked[k].initial_priority;
                        for (std::size_t j = k + 1; j < picked.size(); ++j)
                            inverted = inverted || picked[j].initial_priority < picked[k].initial_priority;
                        res.counters.inversions += inverted;
                        start_task(i, std::move(picked[k]), now);
                    }
                }
                res.cycle_overhead_ms.push_back(spent_ms);
                events.emplace((now + cfg.cycle_period).ns, EventType::cycle, seq++, 0, 0);
                break;
            }
            case EventType::batch: {
                // Computation units start queued work in FIFO batches.
                for (std::size_t i = 0; i < nodes.size(); ++i) {
                    auto& n = nodes[i];
                    if (n.spec.kind != NodeKind::computation_unit) continue;
                    std::size_t take = std::min(n.queue.size(), n.spec.capacity - n.busy);
                    for (std::size_t k = 0; k < take; ++k) start_task(i, std::move(n.queue[k]), now);
                    n.queue.erase(n.queue.begin(), n.queue.begin() + static_cast<std::ptrdiff_t>(take));
                }
                events.emplace((now + topology.batch_window).ns, EventType::batch, seq++, 0, 0);
                break;
            }
        }
    }

    std::size_t queued = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        queued += nodes[i].queue.size();
        snapshot[i].busy_slots = nodes[i].busy;
        snapshot[i].queue_length = nodes[i].queue.size();
    }
    log.record(end, "end", std::nullopt, "", std::nullopt,
               {{"cycles", res.counters.cycles}, {"in_service", in_service.size()}, {"queued", queued}});
    res.event_log = log.str();
    res.final_snapshot = snapshot;
    return res;
}

}  // namespace sass::edgesched
