#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <openssl/rand.h>

#include "sass/harness.hpp"
#include "sass/services.hpp"
#include "sass/services/http.hpp"

namespace fs = std::filesystem;
using namespace sass;
using namespace sass::harness;

namespace {

struct Globals {
    std::uint64_t seed = 42;
    std::string config;
    std::string out;
    bool force = false;
    std::string format = "all";
};

ojson config_or_empty(const Globals& g) { return g.config.empty() ? ojson::object() : read_json_file(g.config); }

fs::path out_dir(const Globals& g, const std::string& fallback) { return g.out.empty() ? fs::path(fallback) : fs::path(g.out); }

bool is_report(const std::string& name) { return name.ends_with("_report.json") || name.ends_with(".csv"); }

/// json keeps the JSON report, csv the CSV tables; raw logs and manifests are always written.
std::vector<OutputFile> select(std::vector<OutputFile> files, const std::string& format) {
    if (format == "all") return files;
    std::vector<OutputFile> kept;
    for (auto& f : files) {
        const bool drop = is_report(f.name) && ((format == "json" && f.name.ends_with(".csv")) ||
                                                (format == "csv" && f.name.ends_with(".json")));
        if (!drop) kept.push_back(std::move(f));
    }
    return kept;
}

void write(const fs::path& dir, const std::vector<OutputFile>& files, const Globals& g) {
    emit_files(dir, select(files, g.format), g.force);
    std::cout << "wrote " << dir.string() << "\n";
}

SyncScenario load_or_generate_sync(const std::string& scenario, const Globals& g, bool noise_free) {
    if (!scenario.empty()) return sync_scenario_from_manifest(read_json_file(fs::path(scenario) / "manifest.json"));
    SyncScenarioSpec spec;
    if (noise_free) spec = spec.noise_free();
    return generate_sync_scenario(spec, g.seed);
}

FusionScenario load_or_generate_fusion(const std::string& scenario, const Globals& g, bool ideal) {
    if (!scenario.empty()) return fusion_scenario_from_manifest(read_json_file(fs::path(scenario) / "manifest.json"));
    FusionScenarioSpec spec;
    if (ideal) spec = spec.ideal();
    return generate_fusion_scenario(spec, g.seed);
}

void print_sync(const SyncReport& r) {
    for (const auto& [k, s] : r.detection)
        std::cout << k << " detection: precision " << csv_number(s.precision) << " recall " << csv_number(s.recall) << "\n";
    std::cout << "misalignment MAE raw " << csv_number(r.raw_mae_s * 1e3) << " ms -> corrected "
              << csv_number(r.corrected_mae_s * 1e3) << " ms (reduction " << csv_number(r.reduction * 100) << "%)\n";
}

void print_fusion(const FusionReport& r) {
    for (const auto& row : r.rows)
        std::cout << row.source << ' ' << fusion::to_string(row.cls) << ": P " << csv_number(row.scores.precision) << " R "
                  << csv_number(row.scores.recall) << " F1 " << csv_number(row.scores.f1) << "\n";
    for (const auto& [c, gain] : r.gain) std::cout << "fused F1 gain " << fusion::to_string(c) << ": " << csv_number(gain) << "\n";
}

void print_sched(const edgesched::SimMetrics& m) {
    std::cout << "throughput " << csv_number(m.throughput) << " tasks/s, inversion rate " << csv_number(m.inversion_rate)
              << ", offload " << csv_number(m.offload_fraction);
    if (m.overhead_ms_per_cycle) std::cout << ", overhead " << csv_number(*m.overhead_ms_per_cycle) << " ms/cycle";
    std::cout << "\n";
}

std::string random_key() {
    unsigned char buf[32];
    if (RAND_bytes(buf, sizeof buf) != 1) throw IoError("cannot draw a random token key");
    static const char* hex = "0123456789abcdef";
    std::string k;
    for (unsigned char b : buf) {
        k += hex[b >> 4];
        k += hex[b & 15];
    }
    return k;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
    if (g_server) g_server->stop();
}

/// Re-derives every report in a run directory from its manifest or raw log.
void reemit(const fs::path& from, const Globals& g) {
    const fs::path dest = out_dir(g, from.string());
    if (fs::exists(from / "sched_report.json")) {
        ojson rep = read_json_file(from / "sched_report.json");
        const auto m = sched_metrics_from_dir(from);
        rep["metrics"] = ojson::parse(edgesched::to_json(m).dump());
        std::ostringstream csv;
        edgesched::write_metrics_csv(csv, m);
        std::vector<OutputFile> files{{"sched_report.json", rep.dump(2) + "\n"}, {"metrics.csv", csv.str()}};
        if (dest != from) {
            files.push_back({"events.ndjson", read_file(from / "events.ndjson")});
            if (fs::exists(from / "overhead.csv")) files.push_back({"overhead.csv", read_file(from / "overhead.csv")});
        }
        print_sched(m);
        write(dest, files, g);
        return;
    }
    const ojson manifest = read_json_file(from / "manifest.json");
    const std::string kind = manifest.value("kind", "");
    if (kind == "sync_scenario") {
        SyncPipelineConfig cfg;
        if (fs::exists(from / "sync_report.json")) cfg = sync_config_from_json(read_json_file(from / "sync_report.json").at("config"));
        const auto sc = sync_scenario_from_manifest(manifest);
        const auto r = run_sync_experiment(sc, cfg);
        print_sync(r);
        write(dest, sync_outputs(sc, r, cfg), g);
    } else if (kind == "fusion_scenario") {
        FusionExperimentConfig cfg;
        if (fs::exists(from / "fusion_report.json")) cfg = fusion_config_from_json(read_json_file(from / "fusion_report.json").at("config"));
        const auto sc = fusion_scenario_from_manifest(manifest);
        const auto r = run_fusion_experiment(sc, cfg);
        print_fusion(r);
        write(dest, fusion_outputs(sc, r), g);
    } else {
        throw ConfigError(from.string() + " holds no recognizable run");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synchronization, fusion and edge scheduling experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "RNG seed");
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory");
    app.add_flag("--force", g.force, "overwrite existing outputs");
    app.add_option("--format", g.format, "report formats to write")->check(CLI::IsMember({"all", "json", "csv"}));

    auto* gen_sync = app.add_subcommand("gen-sync", "generate a synchronization scenario");
    bool noise_free = false;
    gen_sync->add_flag("--noise-free", noise_free, "zero sensor noise and timestamp jitter");

    auto* run_sync = app.add_subcommand("run-sync", "run the two-stage synchronization pipeline");
    std::string sync_scenario;
    run_sync->add_option("--scenario", sync_scenario, "directory written by gen-sync")->check(CLI::ExistingDirectory);
    run_sync->add_flag("--noise-free", noise_free, "generate a noise-free scenario when none is given");

    auto* gen_fusion = app.add_subcommand("gen-fusion", "generate a multi-camera fusion scenario");
    bool ideal = false;
    gen_fusion->add_flag("--ideal", ideal, "no occlusion, noise, misses or false positives");

    auto* run_fusion = app.add_subcommand("run-fusion", "project, fuse and evaluate camera detections");
    std::string fusion_scenario;
    std::optional<double> threshold;
    run_fusion->add_option("--scenario", fusion_scenario, "directory written by gen-fusion")->check(CLI::ExistingDirectory);
    run_fusion->add_flag("--ideal", ideal, "generate an ideal scenario when none is given");
    run_fusion->add_option("--threshold", threshold, "dedup distance in metres");

    auto* run_sched = app.add_subcommand("run-sched", "simulate the edge scheduler");
    std::string workload = "calibrated", topology;
    std::optional<double> alpha;
    double duration_s = 120.0;
    std::string report_dir;
    run_sched->add_option("--workload", workload, "preset (calibrated, monolithic, two_priority) or JSON file");
    run_sched->add_option("--topology", topology, "preset (calibrated, monolithic, single_medium) or JSON file");
    run_sched->add_option("--alpha", alpha, "aging rate");
    run_sched->add_option("--duration", duration_s, "simulated seconds")->check(CLI::PositiveNumber);
    run_sched->add_option("--report-dir", report_dir, "output directory (same as --out)");

    auto* serve = app.add_subcommand("serve", "start the device registry and capture services over HTTP");
    std::string host = "127.0.0.1", store_dir;
    int port = 8080;
    double admin_ttl_h = 24.0;
    serve->add_option("--host", host, "listen address");
    serve->add_option("--port", port, "listen port")->check(CLI::Range(0, 65535));
    serve->add_option("--store", store_dir, "persistent store directory (default: in memory)");
    serve->add_option("--admin-ttl", admin_ttl_h, "admin token lifetime in hours")->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "recompute reports from a run directory");
    std::string from;
    report->add_option("--from", from, "run directory")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen_sync->parsed()) {
            SyncScenarioSpec spec = g.config.empty() ? SyncScenarioSpec{} : sync_spec_from_json(config_or_empty(g));
            if (noise_free) spec = spec.noise_free();
            const auto sc = generate_sync_scenario(spec, g.seed);
            write(out_dir(g, "sync-scenario"), {{"manifest.json", sync_manifest(sc).dump(2) + "\n"}, {"samples.ndjson", sync_samples_ndjson(sc)}}, g);
        } else if (run_sync->parsed()) {
            const auto cfg = g.config.empty() ? SyncPipelineConfig{} : sync_config_from_json(config_or_empty(g));
            const auto sc = load_or_generate_sync(sync_scenario, g, noise_free);
            const auto r = run_sync_experiment(sc, cfg);
            print_sync(r);
            write(out_dir(g, "sync-run"), sync_outputs(sc, r, cfg), g);
        } else if (gen_fusion->parsed()) {
            FusionScenarioSpec spec = g.config.empty() ? FusionScenarioSpec{} : fusion_spec_from_json(config_or_empty(g));
            if (ideal) spec = spec.ideal();
            const auto sc = generate_fusion_scenario(spec, g.seed);
            write(out_dir(g, "fusion-scenario"),
                  {{"manifest.json", fusion_manifest(sc).dump(2) + "\n"}, {"detections.ndjson", fusion_detections_ndjson(sc)}}, g);
        } else if (run_fusion->parsed()) {
            auto cfg = g.config.empty() ? FusionExperimentConfig{} : fusion_config_from_json(config_or_empty(g));
            if (threshold) cfg.threshold = *threshold;
            const auto sc = load_or_generate_fusion(fusion_scenario, g, ideal);
            const auto r = run_fusion_experiment(sc, cfg);
            print_fusion(r);
            write(out_dir(g, "fusion-run"), fusion_outputs(sc, r), g);
        } else if (run_sched->parsed()) {
            auto cfg = g.config.empty() ? edgesched::SchedulerConfig{} : sched_config_from_json(config_or_empty(g));
            if (alpha) cfg.alpha = *alpha;
            const auto w = resolve_workload(workload);
            if (topology.empty()) topology = workload == "two_priority" ? "single_medium" : workload == "monolithic" ? "monolithic" : "calibrated";
            const auto r = run_sched_experiment(w, resolve_topology(topology), cfg, g.seed, from_seconds(duration_s));
            print_sched(r.metrics);
            write(report_dir.empty() ? out_dir(g, "sched-run") : fs::path(report_dir), sched_outputs(r), g);
        } else if (serve->parsed()) {
            const char* env_key = std::getenv("SASS_TOKEN_KEY");
            services::RegistryOptions opts;
            opts.key = env_key && *env_key ? env_key : random_key();
            if (store_dir.empty() && !g.out.empty()) store_dir = g.out;
            std::unique_ptr<services::Storage> store;
            if (store_dir.empty()) store = std::make_unique<services::MemoryStorage>();
            else store = std::make_unique<services::FileStorage>(store_dir);
            services::SystemClock clock;
            services::IdGenerator ids;
            services::Registry registry(*store, clock, ids, std::move(opts));
            services::CaptureService capture(registry, *store, ids);
            services::ServiceApi api(registry, capture);
            const auto admin = registry.issue("admin", {services::Role::admin}, from_seconds(admin_ttl_h * 3600.0));
            std::cout << "admin token: " << admin << "\n"
                      << "listening on http://" << host << ':' << port << std::endl;
            httplib::Server server;
            g_server = &server;
            std::signal(SIGINT, stop_server);
            std::signal(SIGTERM, stop_server);
            if (!services::serve_http(api, host, port, server) && !server.is_running()) {
                std::cerr << "error: cannot listen on " << host << ':' << port << "\n";
                return 4;
            }
        } else if (report->parsed()) {
            reemit(from, g);
        }
    } catch (const StageError& e) {
        std::cerr << "error " << e.what() << "\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
