#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "sass/harness.hpp"

using namespace sass;
using namespace sass::harness;
namespace fs = std::filesystem;

namespace {

SyncScenarioSpec small_sync() {
    SyncScenarioSpec s;
    s.subjects = 2;
    s.gestures_per_subject = 4;
    return s;
}

FusionScenarioSpec small_fusion() {
    FusionScenarioSpec s;
    s.frames = 60;
    return s;
}

std::set<std::string> keys(const ojson& j) {
    std::set<std::string> k;
    for (const auto& [name, v] : j.items()) k.insert(name);
    return k;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("harness_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(SyncScenario, SameSeedIsByteIdentical) {
    const auto a = generate_sync_scenario(small_sync(), 5), b = generate_sync_scenario(small_sync(), 5);
    EXPECT_EQ(sync_manifest(a).dump(), sync_manifest(b).dump());
    EXPECT_EQ(sync_samples_ndjson(a), sync_samples_ndjson(b));
    const auto c = generate_sync_scenario(small_sync(), 6);
    EXPECT_NE(sync_samples_ndjson(a), sync_samples_ndjson(c));
}

TEST(SyncScenario, ManifestRecordsOffsetOverride) {
    auto spec = small_sync();
    spec.offset_override["phone"] = 0.4;
    const ojson m = sync_manifest(generate_sync_scenario(spec, 3));
    std::size_t phones = 0;
    for (const auto& s : m["subjects"])
        for (const auto& st : s["streams"])
            if (st["role"] == "phone") {
                EXPECT_DOUBLE_EQ(st["offset_s"].get<double>(), 0.4);
                ++phones;
            }
    EXPECT_EQ(phones, 2u);
    spec.offset_override["camera"] = 0.1;
    EXPECT_THROW(generate_sync_scenario(spec, 3), ConfigError);
}

TEST(SyncScenario, ManifestRegeneratesAndDetectsTampering) {
    const auto sc = generate_sync_scenario(small_sync(), 9);
    ojson m = sync_manifest(sc);
    const auto again = sync_scenario_from_manifest(m);
    EXPECT_EQ(sync_samples_ndjson(again), sync_samples_ndjson(sc));
    m["subjects"][0]["gestures"][1]["start_ns"] = m["subjects"][0]["gestures"][1]["start_ns"].get<std::int64_t>() + 1;
    EXPECT_THROW(sync_scenario_from_manifest(m), IntegrityError);
    m["kind"] = "fusion_scenario";
    EXPECT_THROW(sync_scenario_from_manifest(m), ConfigError);
}

TEST(SyncScenario, SpecJsonRoundTripAndUnknownKeys) {
    auto spec = small_sync();
    spec.camera_noise = 0.02;
    spec.offset_override["wrist"] = -0.25;
    EXPECT_EQ(to_json(sync_spec_from_json(to_json(spec))).dump(), to_json(spec).dump());
    EXPECT_THROW(sync_spec_from_json(ojson{{"subjectz", 3}}), ConfigError);
}

TEST(SyncExperiment, ZeroClockErrorRecoversZeroOffsets) {
    auto spec = small_sync().noise_free();
    spec.offset_min_s = spec.offset_max_s = 0.0;
    spec.max_drift = 0.0;
    const auto r = run_sync_experiment(generate_sync_scenario(spec, 4));
    for (const auto& s : r.sessions)
        for (const auto& c : s.clocks) {
            EXPECT_EQ(c.true_offset_s, 0.0);
            EXPECT_NEAR(c.model.offset.count(), 0.0, 15e-3) << c.device_id;
            EXPECT_NEAR(c.model.drift_rate, 0.0, 1e-4) << c.device_id;
        }
    EXPECT_LT(r.corrected_mae_s, 5e-3);
}

TEST(SyncExperiment, ReportSchemaStableAcrossSeeds) {
    const auto a = to_json(run_sync_experiment(generate_sync_scenario(small_sync(), 1)));
    const auto b = to_json(run_sync_experiment(generate_sync_scenario(small_sync(), 2)));
    EXPECT_EQ(keys(a), keys(b));
    EXPECT_EQ(keys(a["misalignment"]), keys(b["misalignment"]));
    EXPECT_EQ(keys(a["detection"]), (std::set<std::string>{"imu", "video"}));
    EXPECT_EQ(a["schema_version"], kReportSchemaVersion);
    EXPECT_EQ(a["timing"].size(), 3u);
}

TEST(SyncExperiment, OutputsAreDeterministic) {
    const auto sc = generate_sync_scenario(small_sync(), 11);
    const SyncPipelineConfig cfg;
    const auto a = sync_outputs(sc, run_sync_experiment(sc, cfg), cfg);
    const auto b = sync_outputs(sc, run_sync_experiment(sc, cfg), cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].content, b[i].content) << a[i].name;
}

TEST(SyncExperiment, PipelineConfigJson) {
    SyncPipelineConfig c;
    c.training_subjects = 3;
    c.coarse_tolerance = milliseconds(400);
    const auto back = sync_config_from_json(to_json(c));
    EXPECT_EQ(back.training_subjects, 3);
    EXPECT_EQ(back.coarse_tolerance, milliseconds(400));
    EXPECT_THROW(sync_config_from_json(ojson{{"bogus", 1}}), ConfigError);
    EXPECT_THROW(sync_config_from_json(ojson{{"hmm_states", 1}}), ConfigError);
}

TEST(FusionScenario, SameSeedIsByteIdentical) {
    const auto a = generate_fusion_scenario(small_fusion(), 2), b = generate_fusion_scenario(small_fusion(), 2);
    EXPECT_EQ(fusion_manifest(a).dump(), fusion_manifest(b).dump());
    EXPECT_EQ(fusion_detections_ndjson(a), fusion_detections_ndjson(b));
}

TEST(FusionScenario, ManifestRegeneratesAndDetectsTampering) {
    const auto sc = generate_fusion_scenario(small_fusion(), 8);
    ojson m = fusion_manifest(sc);
    EXPECT_EQ(fusion_detections_ndjson(fusion_scenario_from_manifest(m)), fusion_detections_ndjson(sc));
    m["truth"][3]["objects"][0]["x"] = m["truth"][3]["objects"][0]["x"].get<double>() + 0.5;
    EXPECT_THROW(fusion_scenario_from_manifest(m), IntegrityError);
}

TEST(FusionScenario, TrueHomographyMapsTruthToNoiseFreeDetections) {
    const auto sc = generate_fusion_scenario(small_fusion().ideal(), 4);
    for (const auto& d : sc.detections) {
        ASSERT_GE(d.object, 0);
        const auto& cam = *std::find_if(sc.cameras.begin(), sc.cameras.end(), [&](const auto& c) { return c.id == d.det.camera_id; });
        const auto frame = static_cast<std::size_t>(std::find(sc.frames.begin(), sc.frames.end(), d.det.frame_ts) - sc.frames.begin());
        ASSERT_LT(frame, sc.frames.size());
        const auto obj = std::find_if(sc.truth[frame].begin(), sc.truth[frame].end(), [&](const auto& o) { return o.id == d.object; });
        ASSERT_NE(obj, sc.truth[frame].end());
        fusion::Point2 px;
        ASSERT_TRUE(cam.project(obj->position, px));
        EXPECT_NEAR(px.x, d.det.center.x, 1e-6);
        EXPECT_NEAR(px.y, d.det.center.y, 1e-6);
    }
}

TEST(FusionExperiment, IdealSceneScoresPerfectly) {
    FusionExperimentConfig cfg;
    cfg.threshold = 1e-6;
    const auto r = run_fusion_experiment(generate_fusion_scenario(small_fusion().ideal(), 42), cfg);
    for (const auto& row : r.rows) EXPECT_DOUBLE_EQ(row.scores.f1, 1.0) << row.source << " " << fusion::to_string(row.cls);
    for (const auto& t : r.transforms) EXPECT_LT(t.calibration_rmse_m, 1e-6);
}

TEST(FusionExperiment, FusedCountNonIncreasingInThreshold) {
    const auto r = run_fusion_experiment(generate_fusion_scenario(small_fusion(), 6));
    for (fusion::ObjectClass c : fusion::kAllClasses) {
        std::vector<fusion::SweepRow> rows;
        for (const auto& s : r.sweep)
            if (s.cls == c) rows.push_back(s);
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.threshold < b.threshold; });
        ASSERT_GE(rows.size(), 2u);
        for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].fused_count, rows[i - 1].fused_count);
    }
}

TEST(FusionExperiment, GainIsFusedMinusBestCamera) {
    const auto r = run_fusion_experiment(generate_fusion_scenario(small_fusion(), 3));
    for (fusion::ObjectClass c : fusion::kAllClasses) {
        double best = 0.0, fused = -1.0;
        for (const auto& row : r.rows) {
            if (row.cls != c) continue;
            if (row.source == "fused") fused = row.scores.f1;
            else best = std::max(best, row.scores.f1);
        }
        EXPECT_DOUBLE_EQ(r.gain.at(c), fused - best);
    }
}

TEST(FusionExperiment, ConfigJson) {
    FusionExperimentConfig c;
    c.threshold = 1.5;
    c.sweep = {0.0, 1.0};
    EXPECT_EQ(to_json(fusion_config_from_json(to_json(c))).dump(), to_json(c).dump());
    EXPECT_THROW(fusion_config_from_json(ojson{{"threshold", -1.0}}), ConfigError);
    EXPECT_THROW(fusion_config_from_json(ojson{{"thresh", 1.0}}), ConfigError);
}

TEST(SchedExperiment, SameSeedGivesIdenticalLogAndReport) {
    const auto w = workload_preset("calibrated");
    const auto t = topology_preset("calibrated");
    const auto a = run_sched_experiment(w, t, {}, 7, std::chrono::seconds(20));
    const auto b = run_sched_experiment(w, t, {}, 7, std::chrono::seconds(20));
    EXPECT_EQ(a.result.event_log, b.result.event_log);
    const auto c = run_sched_experiment(w, t, {}, 8, std::chrono::seconds(20));
    EXPECT_NE(a.result.event_log, c.result.event_log);
    // Overhead is wall-clock; everything else must match.
    auto ja = to_json(a), jb = to_json(b);
    for (auto* j : {&ja, &jb}) {
        (*j)["metrics"].erase("overhead_ms_per_cycle");
        (*j)["metrics"].erase("overhead_ms_max");
    }
    EXPECT_EQ(ja.dump(), jb.dump());
}

TEST(SchedExperiment, DecomposedBeatsMonolithicTenfold) {
    const auto dec = run_sched_experiment(workload_preset("calibrated"), topology_preset("calibrated"), {}, 1, std::chrono::seconds(60));
    const auto mono = run_sched_experiment(workload_preset("monolithic"), topology_preset("monolithic"), {}, 1, std::chrono::seconds(60));
    EXPECT_NEAR(dec.metrics.throughput, 57.0, 3.0);
    EXPECT_NEAR(mono.metrics.throughput, 5.0, 0.1);
    EXPECT_GE(dec.metrics.throughput, 10.0 * mono.metrics.throughput);
}

TEST(SchedExperiment, MetricsRecomputeFromEmittedDirectory) {
    TempDir tmp;
    const auto r = run_sched_experiment(workload_preset("two_priority"), topology_preset("single_medium"), {}, 3, std::chrono::seconds(10));
    emit_files(tmp.path, sched_outputs(r), false);
    const auto m = sched_metrics_from_dir(tmp.path);
    EXPECT_EQ(edgesched::to_json(m).dump(), edgesched::to_json(r.metrics).dump());
}

TEST(SchedExperiment, PresetsAndConfigJson) {
    EXPECT_THROW(workload_preset("nope"), ConfigError);
    EXPECT_THROW(topology_preset("nope"), ConfigError);
    EXPECT_DOUBLE_EQ(workload_preset("calibrated").arrival_rate(), 57.0);
    edgesched::SchedulerConfig c;
    c.alpha = 0.5;
    c.tie_break = edgesched::TieBreak::task_id;
    const auto back = sched_config_from_json(to_json(c));
    EXPECT_EQ(back.alpha, 0.5);
    EXPECT_EQ(back.tie_break, edgesched::TieBreak::task_id);
    EXPECT_EQ(back.cycle_period, c.cycle_period);
    EXPECT_THROW(sched_config_from_json(ojson{{"alpha", -1.0}}), ConfigError);
    EXPECT_THROW(sched_config_from_json(ojson{{"cycle", 1.0}}), ConfigError);
}

TEST(SchedExperiment, JsonSpecFilesResolve) {
    TempDir tmp;
    fs::create_directories(tmp.path);
    const auto wpath = tmp.path / "w.json";
    emit_files(tmp.path, {{"w.json", edgesched::to_json(workload_preset("monolithic")).dump()}}, false);
    const auto w = resolve_workload(wpath.string());
    ASSERT_EQ(w.stages.size(), 1u);
    EXPECT_EQ(w.stages[0].service_demand, milliseconds(200));
    emit_files(tmp.path, {{"bad.json", "{not json"}}, false);
    EXPECT_THROW(resolve_workload((tmp.path / "bad.json").string()), ConfigError);
}

TEST(EmitFiles, RefusesOverwriteWithoutForce) {
    TempDir tmp;
    emit_files(tmp.path, {{"a.json", "1"}, {"b.csv", "x\n"}}, false);
    EXPECT_THROW(emit_files(tmp.path, {{"c.json", "3"}, {"a.json", "2"}}, false), UsageError);
    // Nothing was written by the refused call.
    EXPECT_FALSE(fs::exists(tmp.path / "c.json"));
    EXPECT_EQ(read_file(tmp.path / "a.json"), "1");
    emit_files(tmp.path, {{"a.json", "2"}}, true);
    EXPECT_EQ(read_file(tmp.path / "a.json"), "2");
    EXPECT_EQ(read_file(tmp.path / "b.csv"), "x\n");
}

TEST(EmitFiles, UnwritableDirectoryIsIoError) {
    TempDir tmp;
    emit_files(tmp.path, {{"file", "x"}}, false);
    EXPECT_THROW(emit_files(tmp.path / "file" / "sub", {{"a", "1"}}, false), IoError);
}

TEST(Reports, JsonAndCsvCarrySchemaVersion) {
    const auto sc = generate_fusion_scenario(small_fusion(), 1);
    const auto files = fusion_outputs(sc, run_fusion_experiment(sc));
    std::set<std::string> names;
    for (const auto& f : files) {
        names.insert(f.name);
        if (f.name.ends_with(".json")) {
            EXPECT_EQ(ojson::parse(f.content)["schema_version"], kReportSchemaVersion) << f.name;
        }
    }
    EXPECT_TRUE(names.count("fusion_report.json") && names.count("fusion_table.csv") && names.count("fusion_sweep.csv"));
}
