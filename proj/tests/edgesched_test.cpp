#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "sass/edgesched.hpp"

using namespace sass;
using namespace sass::edgesched;

namespace {

Task task(TaskId id, double p, double entry_s, double demand_ms = 5.0, ComputeClass c = ComputeClass::light) {
    return {id, "s", c, p, Timestamp::from_seconds(entry_s), from_seconds(demand_ms / 1e3), std::nullopt};
}

TopologySpec one_medium_one_cu(double threshold = 0.8) {
    TopologySpec t;
    t.nodes = {{"m0", NodeKind::medium, 1}, {"cu0", NodeKind::computation_unit, 4}};
    t.overload_threshold = threshold;
    return t;
}

WorkloadSpec two_priority(double rate_each, double demand_ms) {
    WorkloadSpec w;
    w.arrival = ArrivalProcess::poisson;
    w.stages = {{"urgent", ComputeClass::light, rate_each, from_seconds(demand_ms / 1e3), 0.2, 1.0},
                {"background", ComputeClass::light, rate_each, from_seconds(demand_ms / 1e3), 0.2, 0.0}};
    return w;
}

}  // namespace

TEST(Priority, ClosedFormExamples) {
    SchedulerConfig cfg;
    const Task t = task(1, 0.5, 10.0);
    EXPECT_EQ(compute_priority(t, t.entry_time, cfg), 0.5);
    EXPECT_NEAR(compute_priority(t, t.entry_time + from_seconds(std::numbers::e - 1.0), cfg), 1.5, 1e-9);
    cfg.alpha = 2.0;
    const Task u = task(2, 1.0, 0.0);
    EXPECT_NEAR(compute_priority(u, Timestamp::from_seconds(9.0), cfg), 1.0 + 2.0 * std::log(10.0), 1e-12);
    EXPECT_NEAR(compute_priority(u, Timestamp::from_seconds(9.0), cfg), 5.60517, 1e-5);
    EXPECT_THROW(compute_priority(t, Timestamp{0}, cfg), UsageError);
}

TEST(Priority, GrowthMonotoneWithDecreasingRate) {
    SchedulerConfig cfg;
    const Task t = task(1, 0.0, 0.0);
    double prev = compute_priority(t, Timestamp{0}, cfg), prev_step = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 200; ++k) {
        const double p = compute_priority(t, Timestamp::from_seconds(0.05 * k), cfg);
        EXPECT_GT(p, prev);
        EXPECT_LT(p - prev, prev_step);
        prev_step = p - prev;
        prev = p;
    }
}

TEST(ScheduleCycle, MoreUrgentFirstAndNoSlots) {
    SchedulerConfig cfg;
    std::vector<Task> q{task(1, 1.0, 0.0), task(2, 0.0, 0.0)};
    auto d = schedule_cycle(q, 1, Timestamp{0}, cfg);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].id, 2u);
    ASSERT_EQ(q.size(), 1u);
    auto before = q;
    EXPECT_TRUE(schedule_cycle(q, 0, Timestamp::from_seconds(1.0), cfg).empty());
    EXPECT_EQ(q.size(), before.size());
    EXPECT_EQ(q[0].id, before[0].id);
}

TEST(ScheduleCycle, OrderIsTheUniqueSortedPermutation) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> len(1, 6), pr(0, 2), entry(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
        SchedulerConfig cfg;
        cfg.tie_break = trial % 2 ? TieBreak::fifo : TieBreak::task_id;
        std::vector<Task> q;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) q.push_back(task(static_cast<TaskId>(10 - i), pr(rng) * 0.5, entry(rng) * 0.5));
        const Timestamp now = Timestamp::from_seconds(2.0);
        auto copy = q;
        const auto out = schedule_cycle(copy, q.size(), now, cfg);
        ASSERT_TRUE(copy.empty());
        // Exhaustive: exactly one permutation has every adjacent pair in order.
        std::vector<std::size_t> perm(q.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::sort(perm.begin(), perm.end());
        int sorted_count = 0;
        std::vector<TaskId> expect;
        do {
            bool ok = true;
            for (std::size_t k = 1; k < perm.size(); ++k) ok = ok && dispatch_before(q[perm[k - 1]], q[perm[k]], now, cfg);
            if (ok) {
                ++sorted_count;
                expect.clear();
                for (auto i : perm) expect.push_back(q[i].id);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        ASSERT_EQ(sorted_count, 1);
        std::vector<TaskId> got;
        for (const auto& t : out) got.push_back(t.id);
        EXPECT_EQ(got, expect);
    }
}

TEST(ScheduleCycle, CrossoverAtAnalyticWaitTime) {
    // A low-urgency task (P=1) against a freshly arrived urgent task (P=0),
    // re-evaluated each cycle: it must win exactly once W > e - 1.
    SchedulerConfig cfg;
    const double w_star = std::numbers::e - 1.0;
    const double cycle = to_seconds(cfg.cycle_period);
    std::optional<double> overtake;
    for (int k = 0; k < 10000 && !overtake; ++k) {
        const double now_s = k * cycle;
        std::vector<Task> q{task(1, 1.0, 0.0), task(2, 0.0, now_s)};
        const auto d = schedule_cycle(q, 1, Timestamp::from_seconds(now_s), cfg);
        if (d[0].id == 1) overtake = now_s;
    }
    ASSERT_TRUE(overtake.has_value());
    EXPECT_GE(*overtake, w_star - 1e-9);
    EXPECT_LE(*overtake, w_star + cycle);

    // Same law for other gaps and decay factors: W* = exp(dP / alpha) - 1.
    for (double alpha : {0.5, 1.0, 2.0})
        for (double dp : {0.25, 1.0, 1.5}) {
            SchedulerConfig c;
            c.alpha = alpha;
            const double ws = std::exp(dp / alpha) - 1.0;
            const Task lo = task(1, dp, 0.0);
            const auto hi_at = [&](double s) { return task(2, 0.0, s); };
            const Timestamp before = Timestamp::from_seconds(ws * 0.999), after = Timestamp::from_seconds(ws * 1.001);
            EXPECT_FALSE(dispatch_before(lo, hi_at(ws * 0.999), before, c)) << alpha << " " << dp;
            EXPECT_TRUE(dispatch_before(lo, hi_at(ws * 1.001), after, c)) << alpha << " " << dp;
        }
}

TEST(Routing, ClassifyAndRedirect) {
    std::vector<NodeState> nodes{{"m0", NodeKind::medium, 1, 0, 0, 0.0, 0.8},
                                 {"m1", NodeKind::medium, 1, 0, 0, 0.3, 0.8},
                                 {"cu", NodeKind::computation_unit, 4, 0, 0, 0.1, 0.8}};
    const Task light = task(1, 0.0, 0.0);
    const Task heavy = task(2, 0.0, 0.0, 20.0, ComputeClass::heavy);
    EXPECT_EQ(classify_and_route(light, nodes).node, 0u);
    EXPECT_FALSE(classify_and_route(light, nodes).redirected);
    EXPECT_EQ(classify_and_route(heavy, nodes).node, 2u);
    nodes[0].utilization = 0.9;
    nodes[1].utilization = 0.85;
    const auto r = classify_and_route(light, nodes);
    EXPECT_EQ(r.node, 2u);
    EXPECT_TRUE(r.redirected);
    EXPECT_THROW(classify_and_route(heavy, {nodes[0], nodes[1]}), TopologyError);
    EXPECT_THROW(classify_and_route(light, {nodes[2]}), TopologyError);
}

TEST(Monitor, UtilizationWindow) {
    UtilizationWindow idle;
    EXPECT_EQ(idle.sample(Timestamp::from_seconds(1.0), std::chrono::seconds(1), 2), 0.0);
    UtilizationWindow full;
    full.advance(Timestamp::from_seconds(1.0), 2);  // two slots busy throughout
    EXPECT_DOUBLE_EQ(full.sample(Timestamp::from_seconds(1.0), std::chrono::seconds(1), 2), 1.0);
    full.advance(Timestamp::from_seconds(2.0), 2);
    EXPECT_DOUBLE_EQ(full.sample(Timestamp::from_seconds(2.0), std::chrono::seconds(1), 2), 1.0);
}

TEST(Simulation, SingleTaskLatencyIsDelayPlusDemand) {
    WorkloadSpec w;
    w.stages = {{"once", ComputeClass::light, 0.001, milliseconds(7), 0.0, 1.0}};
    const auto r = run_simulation(w, one_medium_one_cu(), {}, 3, std::chrono::seconds(1000));
    std::istringstream is(r.event_log);
    std::string line;
    std::int64_t arrive = -1, dispatch = -1, complete = -1;
    while (std::getline(is, line)) {
        const auto j = nlohmann::json::parse(line);
        if (j["event"] == "arrive") arrive = j["t_ns"];
        if (j["event"] == "dispatch") dispatch = j["t_ns"];
        if (j["event"] == "complete") complete = j["t_ns"];
    }
    ASSERT_GE(arrive, 0);
    EXPECT_LT(dispatch - arrive, milliseconds(5).count() + 1);
    EXPECT_EQ(complete - arrive, (dispatch - arrive) + milliseconds(7).count());
}

TEST(Simulation, DeterministicLogAndDualAccounting) {
    const auto w = two_priority(50.0, 8.0);
    const auto a = run_simulation(w, one_medium_one_cu(), {}, 42, std::chrono::seconds(20));
    const auto b = run_simulation(w, one_medium_one_cu(), {}, 42, std::chrono::seconds(20));
    EXPECT_EQ(a.event_log, b.event_log);
    EXPECT_NE(a.event_log, run_simulation(w, one_medium_one_cu(), {}, 43, std::chrono::seconds(20)).event_log);

    const auto m = compute_metrics(a.event_log);
    EXPECT_EQ(m.arrived, a.counters.arrived);
    EXPECT_EQ(m.dispatched, a.counters.dispatched);
    EXPECT_EQ(m.completed, a.counters.completed);
    EXPECT_EQ(m.redirected, a.counters.redirected);
    EXPECT_EQ(m.cycles, a.counters.cycles);
    const double live_inv = a.counters.medium_dispatches
                                ? static_cast<double>(a.counters.inversions) / a.counters.medium_dispatches
                                : 0.0;
    EXPECT_DOUBLE_EQ(m.inversion_rate, live_inv);
    EXPECT_DOUBLE_EQ(m.offload_fraction, static_cast<double>(a.counters.offloaded) / a.counters.dispatched);
    // Conservation and monitor consistency.
    EXPECT_EQ(m.arrived, m.completed + m.in_service_at_end + m.queued_at_end);
    std::size_t busy = 0;
    for (const auto& n : a.final_snapshot) busy += n.busy_slots;
    EXPECT_EQ(busy, a.counters.dispatched - a.counters.completed);
}

TEST(Simulation, InversionBoundAndClassOrderingUnderSaturation) {
    auto topo = one_medium_one_cu(1.0);  // never redirect: all contention stays on m0
    SchedulerConfig cfg;
    cfg.alpha = 1.0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r = run_simulation(two_priority(57.5, 8.0), topo, cfg, seed, std::chrono::seconds(120));
        const auto m = compute_metrics(r.event_log, &r.cycle_overhead_ms);
        EXPECT_LE(m.inversion_rate, 0.05) << "seed " << seed;
        EXPECT_LT(m.per_priority.at(0.0).mean_latency_ms, m.per_priority.at(1.0).mean_latency_ms);
        EXPECT_LT(*m.overhead_ms_per_cycle, 1.0);
        // Bounded waits: nobody starves at sub-unit load.
        EXPECT_LT(m.per_priority.at(1.0).mean_wait_ms, 10'000.0);
        EXPECT_LT(m.queued_at_end, 50u);
    }
}

TEST(Metrics, HandBuiltLog) {
    const std::string log =
        R"({"t_ns":0,"event":"node","task_id":null,"node_id":"m0","p_eff":null,"kind":"medium","capacity":1})" "\n"
        R"({"t_ns":1000000,"event":"arrive","task_id":1,"node_id":"m0","p_eff":0.0})" "\n"
        R"({"t_ns":5000000,"event":"dispatch","task_id":1,"node_id":"m0","p_eff":0.004})" "\n"
        R"({"t_ns":15000000,"event":"complete","task_id":1,"node_id":"m0","p_eff":null})" "\n"
        R"({"t_ns":2000000000,"event":"end","task_id":null,"node_id":null,"p_eff":null,"cycles":400})" "\n";
    const auto m = compute_metrics(log);
    EXPECT_DOUBLE_EQ(m.throughput, 0.5);
    EXPECT_DOUBLE_EQ(m.per_priority.at(0.0).mean_latency_ms, 14.0);
    EXPECT_DOUBLE_EQ(m.per_priority.at(0.0).mean_wait_ms, 4.0);
    EXPECT_DOUBLE_EQ(m.per_priority.at(0.0).wait_variance_ms2, 0.0);
    EXPECT_EQ(m.inversion_rate, 0.0);
    EXPECT_EQ(m.offload_fraction, 0.0);
    EXPECT_FALSE(m.overhead_ms_per_cycle.has_value());

    const std::string truncated = log.substr(0, log.rfind(R"({"t_ns":2000000000)"));
    EXPECT_THROW(compute_metrics(truncated), IntegrityError);
    EXPECT_THROW(compute_metrics(std::string(R"({"t_ns":0,"event":"complete","task_id":9,"node_id":"m0","p_eff":null})") + "\n"),
                 IntegrityError);
}

TEST(Specs, JsonRoundTripAndValidation) {
    const auto w = two_priority(10.0, 5.0);
    const auto w2 = workload_from_json(to_json(w));
    ASSERT_EQ(w2.stages.size(), 2u);
    EXPECT_EQ(w2.stages[1].high_priority_fraction, 0.0);
    EXPECT_EQ(w2.arrival, ArrivalProcess::poisson);
    const auto t = topology_from_json(to_json(one_medium_one_cu()));
    EXPECT_EQ(t.nodes[1].kind, NodeKind::computation_unit);
    EXPECT_EQ(t.batch_window, milliseconds(100));
    auto bad = to_json(w);
    bad["stages"][0]["service_ms"] = 0.0;
    EXPECT_THROW(workload_from_json(bad), ConfigError);
    SchedulerConfig c;
    c.alpha = -1.0;
    EXPECT_THROW(run_simulation(w, one_medium_one_cu(), c, 0, std::chrono::seconds(1)), ConfigError);
}
