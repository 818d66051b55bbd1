#pragma once

#include <chrono>
#include <filesystem>
#include <sstream>
#include <string>

#include "sass/edgesched.hpp"
#include "sass/harness/report.hpp"

namespace sass::harness {

/// Named workloads:
///   calibrated  - the decomposed perception pipeline, 57 tasks/s over eight stages
///   monolithic  - the same pipeline as one end-to-end job on a single slot
///   two_priority - two saturating light streams at P_initial 0 and 1
inline edgesched::WorkloadSpec workload_preset(const std::string& name) {
    using edgesched::ComputeClass;
    edgesched::WorkloadSpec w;
    if (name == "calibrated") {
        // Per-task demands sum to the end-to-end stage latencies: light chain
        // 4 x 7.5 ms = 30 ms, capture + 3D box + pose = 50 ms at the heavy end,
        // visualization 200 ms.
        w.stages = {{"preprocess", ComputeClass::light, 10.0, from_seconds(0.0075), 0.2, 1.0},
                    {"detection", ComputeClass::light, 8.0, from_seconds(0.0075), 0.2, 1.0},
                    {"tracking", ComputeClass::light, 7.0, from_seconds(0.0075), 0.2, 0.5},
                    {"trajectory", ComputeClass::light, 5.0, from_seconds(0.0075), 0.2, 0.5},
                    {"mobile_capture", ComputeClass::heavy, 10.0, milliseconds(5), 0.2, 1.0},
                    {"bbox3d", ComputeClass::heavy, 6.0, milliseconds(20), 0.2, 0.5},
                    {"pose", ComputeClass::heavy, 6.0, milliseconds(25), 0.2, 0.5},
                    {"visualization", ComputeClass::heavy, 5.0, milliseconds(200), 0.2, 0.0}};
        w.arrival = edgesched::ArrivalProcess::poisson;
    } else if (name == "monolithic") {
        // Offered at the camera rate; each job holds the only slot for the
        // slowest stage's 200 ms, so at most 5 finish per second.
        w.stages = {{"pipeline", ComputeClass::heavy, 30.0, milliseconds(200), 0.0, 1.0}};
        w.arrival = edgesched::ArrivalProcess::periodic;
    } else if (name == "two_priority") {
        w.stages = {{"urgent", ComputeClass::light, 57.5, milliseconds(8), 0.2, 1.0},
                    {"background", ComputeClass::light, 57.5, milliseconds(8), 0.2, 0.0}};
        w.arrival = edgesched::ArrivalProcess::poisson;
    } else {
        throw ConfigError("unknown workload preset: " + name);
    }
    return w;
}

inline edgesched::TopologySpec topology_preset(const std::string& name) {
    using edgesched::NodeKind;
    edgesched::TopologySpec t;
    if (name == "calibrated") {
        t.nodes = {{"medium-0", NodeKind::medium, 1}, {"medium-1", NodeKind::medium, 1}, {"cu-0", NodeKind::computation_unit, 4}};
    } else if (name == "monolithic") {
        t.nodes = {{"cu-0", NodeKind::computation_unit, 1}};
    } else if (name == "single_medium") {
        // Light work never redirects, so every task competes in one queue.
        t.nodes = {{"medium-0", NodeKind::medium, 1}, {"cu-0", NodeKind::computation_unit, 4}};
        t.overload_threshold = 1.0;
    } else {
        throw ConfigError("unknown topology preset: " + name);
    }
    return t;
}

inline nlohmann::json read_spec_file(const std::string& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// A preset name, or a path to a JSON spec.
inline edgesched::WorkloadSpec resolve_workload(const std::string& arg) {
    if (std::filesystem::exists(arg)) return edgesched::workload_from_json(read_spec_file(arg));
    return workload_preset(arg);
}

inline edgesched::TopologySpec resolve_topology(const std::string& arg) {
    if (std::filesystem::exists(arg)) return edgesched::topology_from_json(read_spec_file(arg));
    return topology_preset(arg);
}

inline ojson to_json(const edgesched::SchedulerConfig& c) {
    return {{"alpha", c.alpha},
            {"cycle_period_ms", to_seconds(c.cycle_period) * 1e3},
            {"tie_break", c.tie_break == edgesched::TieBreak::fifo ? "fifo" : "task_id"}};
}

inline edgesched::SchedulerConfig sched_config_from_json(const ojson& j) {
    edgesched::SchedulerConfig c;
    ojson m = to_json(c);
    for (const auto& [k, v] : j.items())
        if (!m.contains(k)) throw ConfigError("unknown scheduler key: " + k);
    m.update(j);
    try {
        c.alpha = m["alpha"];
        c.cycle_period = from_seconds(m["cycle_period_ms"].get<double>() * 1e-3);
        const std::string tb = m["tie_break"];
        if (tb == "fifo") c.tie_break = edgesched::TieBreak::fifo;
        else if (tb == "task_id") c.tie_break = edgesched::TieBreak::task_id;
        else throw ConfigError("tie_break must be fifo or task_id");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad scheduler config: ") + e.what());
    }
    c.validate();
    return c;
}

struct SchedRun {
    std::uint64_t seed = 0;
    edgesched::WorkloadSpec workload;
    edgesched::TopologySpec topology;
    edgesched::SchedulerConfig config;
    Duration duration{};
    edgesched::SimResult result;
    edgesched::SimMetrics metrics;  // recomputed from the event log
};

inline SchedRun run_sched_experiment(const edgesched::WorkloadSpec& workload, const edgesched::TopologySpec& topology,
                                     const edgesched::SchedulerConfig& cfg, std::uint64_t seed, Duration duration) {
    SchedRun r{seed, workload, topology, cfg, duration, {}, {}};
    try {
        r.result = edgesched::run_simulation(workload, topology, cfg, seed, duration);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("simulate", e.what());
    }
    try {
        r.metrics = edgesched::compute_metrics(r.result.event_log, &r.result.cycle_overhead_ms);
    } catch (const std::exception& e) {
        throw StageError("metrics", e.what());
    }
    return r;
}

inline ojson to_json(const SchedRun& r) {
    ojson j = report_header("sched_report", r.seed);
    j["duration_s"] = to_seconds(r.duration);
    j["config"] = to_json(r.config);
    j["workload"] = ojson::parse(edgesched::to_json(r.workload).dump());
    j["topology"] = ojson::parse(edgesched::to_json(r.topology).dump());
    j["metrics"] = ojson::parse(edgesched::to_json(r.metrics).dump());
    return j;
}

inline std::string sched_metrics_csv(const SchedRun& r) {
    std::ostringstream os;
    edgesched::write_metrics_csv(os, r.metrics);
    return os.str();
}

inline std::string overhead_csv(const SchedRun& r) {
    std::string out = "cycle,overhead_ms\n";
    for (std::size_t i = 0; i < r.result.cycle_overhead_ms.size(); ++i)
        out += std::to_string(i) + ',' + csv_number(r.result.cycle_overhead_ms[i]) + '\n';
    return out;
}

/// The event log is the raw record; metrics are recomputed from it, plus the
/// wall-clock overhead samples, which no log can carry.
inline std::vector<OutputFile> sched_outputs(const SchedRun& r) {
    return {{"sched_report.json", to_json(r).dump(2) + "\n"},
            {"metrics.csv", sched_metrics_csv(r)},
            {"events.ndjson", r.result.event_log},
            {"overhead.csv", overhead_csv(r)}};
}

/// Recomputes metrics from an emitted run directory.
inline edgesched::SimMetrics sched_metrics_from_dir(const std::filesystem::path& dir) {
    std::vector<double> overhead;
    if (std::filesystem::exists(dir / "overhead.csv")) {
        std::istringstream is(read_file(dir / "overhead.csv"));
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
            const auto comma = line.find(',');
            if (comma == std::string::npos) throw IntegrityError("malformed overhead.csv line: " + line);
            overhead.push_back(std::stod(line.substr(comma + 1)));
        }
    }
    return edgesched::compute_metrics(read_file(dir / "events.ndjson"), overhead.empty() ? nullptr : &overhead);
}

}  // namespace sass::harness
