#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sass/fusion.hpp"
#include "sass/harness/fusion_scenario.hpp"
#include "sass/harness/report.hpp"

namespace sass::harness {

struct FusionExperimentConfig {
    double threshold = 3.0;  // dedup distance for the headline table, metres
    std::vector<double> sweep = fusion::default_sweep_thresholds();
    double match_radius = fusion::kDefaultMatchRadius;
    fusion::TransformKind transform = fusion::TransformKind::homography;
    double ransac_threshold_m = 0.5;
    std::size_t ransac_iterations = 500;
    fusion::NetArchitecture net_arch;
    fusion::NetTrainingConfig net;

    void validate() const {
        if (!(threshold >= 0.0)) throw ConfigError("fusion threshold must be >= 0");
        if (sweep.empty()) throw ConfigError("sweep needs at least one threshold");
        for (double t : sweep)
            if (!(t >= 0.0)) throw ConfigError("sweep thresholds must be >= 0");
        if (!(match_radius > 0.0)) throw ConfigError("match radius must be positive");
    }
};

inline ojson to_json(const FusionExperimentConfig& c) {
    return {{"threshold", c.threshold},
            {"sweep", c.sweep},
            {"match_radius", c.match_radius},
            {"transform", c.transform == fusion::TransformKind::homography ? "homography" : "learned"},
            {"ransac_threshold_m", c.ransac_threshold_m},
            {"ransac_iterations", c.ransac_iterations}};
}

inline FusionExperimentConfig fusion_config_from_json(const ojson& j) {
    FusionExperimentConfig c;
    const ojson defaults = to_json(c);
    for (const auto& [k, v] : j.items())
        if (!defaults.contains(k)) throw ConfigError("unknown fusion experiment key: " + k);
    ojson m = defaults;
    m.update(j);
    try {
        c.threshold = m["threshold"];
        c.sweep = m["sweep"].get<std::vector<double>>();
        c.match_radius = m["match_radius"];
        const std::string t = m["transform"];
        if (t == "homography") c.transform = fusion::TransformKind::homography;
        else if (t == "learned") c.transform = fusion::TransformKind::learned;
        else throw ConfigError("transform must be homography or learned");
        c.ransac_threshold_m = m["ransac_threshold_m"];
        c.ransac_iterations = m["ransac_iterations"];
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad fusion experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

struct CameraTransformReport {
    std::string camera_id;
    std::size_t calibration_pairs = 0;
    std::size_t inliers = 0;
    double calibration_rmse_m = 0.0;
    std::size_t detections = 0;
    std::size_t dropped = 0;  // could not be mapped to the ground plane
};

struct FusionRow {
    std::string source;  // camera id or "fused"
    fusion::ObjectClass cls = fusion::ObjectClass::pedestrian;
    DetectionScores scores;
};

struct FusionReport {
    std::uint64_t seed = 0;
    FusionExperimentConfig config;
    std::vector<CameraTransformReport> transforms;
    std::vector<FusionRow> rows;
    std::map<fusion::ObjectClass, double> gain;  // fused F1 - best single-camera F1
    std::vector<fusion::SweepRow> sweep;
    std::vector<fusion::FusedDetection> fused;
};

inline FusionReport run_fusion_experiment(const FusionScenario& sc, const FusionExperimentConfig& cfg = {}) {
    cfg.validate();
    FusionReport rep;
    rep.seed = sc.seed;
    rep.config = cfg;
    const auto truth = sc.truth_detections();

    std::vector<fusion::Detection> top_view;
    std::map<fusion::ObjectClass, double> best_single;
    for (std::size_t ci = 0; ci < sc.cameras.size(); ++ci) {
        const auto& cam = sc.cameras[ci];
        const auto& pairs = sc.calibration[ci];
        CameraTransformReport tr;
        tr.camera_id = cam.id;
        tr.calibration_pairs = pairs.size();
        fusion::PerspectiveTransform t;
        try {
            if (cfg.transform == fusion::TransformKind::homography) {
                const auto fit = fusion::ransac_fit(pairs, cfg.ransac_threshold_m, cfg.ransac_iterations, sc.seed + ci);
                t = fusion::PerspectiveTransform::from_homography(fit.H);
                tr.inliers = fit.inlier_count;
            } else {
                t = fusion::PerspectiveTransform::from_net(fusion::fit_transform_net(pairs, cfg.net_arch, cfg.net, sc.seed + ci).net);
                tr.inliers = pairs.size();
            }
        } catch (const std::exception& e) {
            throw StageError("transform", cam.id + ": " + e.what());
        }
        double se = 0.0;
        for (const auto& p : pairs) {
            fusion::Point2 q;
            const double e = t.map(p.source, q) ? distance(q, p.target) : std::numeric_limits<double>::infinity();
            se += e * e;
        }
        tr.calibration_rmse_m = std::sqrt(se / static_cast<double>(pairs.size()));

        const auto image = sc.image_detections(cam.id);
        const auto proj = fusion::project(image, t);
        tr.detections = image.size();
        tr.dropped = proj.dropped.size();
        rep.transforms.push_back(tr);

        const auto scores = fusion::evaluate_detections(proj.projected, truth, cfg.match_radius);
        for (fusion::ObjectClass c : fusion::kAllClasses) {
            rep.rows.push_back({cam.id, c, scores.at(c)});
            best_single[c] = std::max(best_single[c], scores.at(c).f1);
        }
        top_view.insert(top_view.end(), proj.projected.begin(), proj.projected.end());
    }

    rep.fused = fusion::fuse_frames(top_view, cfg.threshold);
    const auto fused_scores = fusion::evaluate_detections(rep.fused, truth, cfg.match_radius);
    for (fusion::ObjectClass c : fusion::kAllClasses) {
        rep.rows.push_back({"fused", c, fused_scores.at(c)});
        rep.gain[c] = fused_scores.at(c).f1 - best_single[c];
    }
    rep.sweep = fusion::threshold_sweep(top_view, truth, cfg.sweep, cfg.match_radius);
    return rep;
}

inline ojson to_json(const FusionReport& r) {
    ojson j = report_header("fusion_report", r.seed);
    j["config"] = to_json(r.config);
    ojson tr = ojson::array();
    for (const auto& t : r.transforms)
        tr.push_back({{"camera_id", t.camera_id},
                      {"calibration_pairs", t.calibration_pairs},
                      {"inliers", t.inliers},
                      {"calibration_rmse_m", t.calibration_rmse_m},
                      {"detections", t.detections},
                      {"dropped", t.dropped}});
    j["transforms"] = tr;
    ojson rows = ojson::array();
    for (const auto& row : r.rows)
        rows.push_back({{"source", row.source},
                        {"class", fusion::to_string(row.cls)},
                        {"precision", row.scores.precision},
                        {"recall", row.scores.recall},
                        {"f1", row.scores.f1},
                        {"true_positives", row.scores.true_positives},
                        {"false_positives", row.scores.false_positives},
                        {"false_negatives", row.scores.false_negatives}});
    j["table"] = rows;
    ojson gain;
    for (const auto& [c, g] : r.gain) gain[fusion::to_string(c)] = g;
    j["fused_f1_gain"] = gain;
    j["fused_count"] = r.fused.size();
    return j;
}

inline std::string fusion_table_csv(const FusionReport& r) {
    std::string out = "source,class,precision,recall,f1\n";
    for (const auto& row : r.rows)
        out += row.source + ',' + fusion::to_string(row.cls) + ',' + csv_number(row.scores.precision) + ',' +
               csv_number(row.scores.recall) + ',' + csv_number(row.scores.f1) + '\n';
    return out;
}

inline std::string fusion_sweep_csv(const FusionReport& r) {
    std::ostringstream os;
    fusion::write_sweep_csv(os, r.sweep);
    return os.str();
}

inline std::string fused_ndjson(const FusionReport& r) {
    std::string out;
    for (const auto& f : r.fused) out += fusion::to_json(f).dump() + "\n";
    return out;
}

inline std::vector<OutputFile> fusion_outputs(const FusionScenario& sc, const FusionReport& r) {
    return {{"manifest.json", fusion_manifest(sc).dump(2) + "\n"},
            {"fusion_report.json", to_json(r).dump(2) + "\n"},
            {"fusion_table.csv", fusion_table_csv(r)},
            {"fusion_sweep.csv", fusion_sweep_csv(r)},
            {"fused.ndjson", fused_ndjson(r)}};
}

}  // namespace sass::harness
