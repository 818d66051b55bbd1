#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sass/eventsync.hpp"
#include "sass/harness/report.hpp"
#include "sass/harness/sync_scenario.hpp"
#include "sass/scores.hpp"
#include "sass/timebase.hpp"

namespace sass::harness {

/// Failure inside one pipeline stage; the CLI prints the stage tag.
inline eventsync::FineTuneConfig fine_grid(std::size_t bins, double upsample_hz) {
    eventsync::FineTuneConfig c;
    c.entropy_bins = bins;
    c.upsample_hz = upsample_hz;
    return c;
}

struct SyncPipelineConfig {
    Duration video_window = std::chrono::seconds(4);
    Duration video_stride = milliseconds(100);
    double template_tail_s = 1.0;
    int dba_iterations = 10;
    std::size_t hmm_states = 2;
    int hmm_iterations = 30;
    Duration coarse_tolerance = milliseconds(500);
    Duration bulk_search = milliseconds(1500);
    Duration detection_tolerance = milliseconds(500);
    // The camera height leaves rest quadratically; a finer grid catches it
    // earlier and makes the onset less sensitive to gesture speed. Upsampling
    // removes the frame-phase quantization of the 30 Hz stream.
    eventsync::FineTuneConfig fine_camera = fine_grid(64, 1000.0);
    eventsync::FineTuneConfig fine_imu = fine_grid(eventsync::kEntropyBins, 1000.0);
    int training_subjects = 4;
    Duration outlier_floor = milliseconds(25);  // clock-fit residual always tolerated
    bool calibrate_bias = true;
};

inline ojson to_json(const SyncPipelineConfig& c) {
    return {{"dba_iterations", c.dba_iterations},
            {"hmm_states", c.hmm_states},
            {"hmm_iterations", c.hmm_iterations},
            {"coarse_tolerance_ms", to_seconds(c.coarse_tolerance) * 1e3},
            {"bulk_search_ms", to_seconds(c.bulk_search) * 1e3},
            {"detection_tolerance_ms", to_seconds(c.detection_tolerance) * 1e3},
            {"training_subjects", c.training_subjects},
            {"outlier_floor_ms", to_seconds(c.outlier_floor) * 1e3},
            {"calibrate_bias", c.calibrate_bias}};
}

inline SyncPipelineConfig sync_config_from_json(const ojson& j) {
    SyncPipelineConfig c;
    ojson m = to_json(c);
    for (const auto& [k, v] : j.items())
        if (!m.contains(k)) throw ConfigError("unknown sync pipeline key: " + k);
    m.update(j);
    try {
        c.dba_iterations = m["dba_iterations"];
        c.hmm_states = m["hmm_states"];
        c.hmm_iterations = m["hmm_iterations"];
        c.coarse_tolerance = from_seconds(m["coarse_tolerance_ms"].get<double>() * 1e-3);
        c.bulk_search = from_seconds(m["bulk_search_ms"].get<double>() * 1e-3);
        c.detection_tolerance = from_seconds(m["detection_tolerance_ms"].get<double>() * 1e-3);
        c.training_subjects = m["training_subjects"];
        c.outlier_floor = from_seconds(m["outlier_floor_ms"].get<double>() * 1e-3);
        c.calibrate_bias = m["calibrate_bias"];
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad sync pipeline config: ") + e.what());
    }
    if (c.dba_iterations < 1 || c.hmm_iterations < 1 || c.hmm_states < 2 || c.training_subjects < 1)
        throw ConfigError("sync pipeline iterations, states and training subjects must be positive");
    if (c.coarse_tolerance <= Duration::zero() || c.bulk_search <= Duration::zero() || c.detection_tolerance <= Duration::zero())
        throw ConfigError("sync pipeline tolerances must be positive");
    if (c.outlier_floor < Duration::zero()) throw ConfigError("outlier floor must be >= 0");
    return c;
}

/// Everything the pipeline learns from a separate training session set.
struct TrainedDetectors {
    eventsync::GestureTemplate tmpl;
    eventsync::HmmModel hmm;
    std::map<StreamRole, double> onset_bias_s;  // refined - true onset, local clock
};

namespace detail {

inline eventsync::TimeSeries camera_series(const timebase::SampleStream& st) {
    eventsync::TimeSeries z;
    for (const auto& s : st.samples) z.push_back(s.local_ts, s.payload[0]);
    z.validate();
    return z;
}

inline eventsync::TimeSeries imu_series(const timebase::SampleStream& st) {
    eventsync::TimeSeries s;
    s.channels = 6;
    for (const auto& x : st.samples) s.push_back(x.local_ts, x.payload);
    s.validate();
    return s;
}

inline eventsync::TimeSeries accel_magnitude(const eventsync::TimeSeries& imu) {
    eventsync::TimeSeries m;
    for (std::size_t i = 0; i < imu.size(); ++i) {
        const double a = imu.at(i, 0), b = imu.at(i, 1), c = imu.at(i, 2);
        m.push_back(imu.timestamps[i], std::sqrt(a * a + b * b + c * c));
    }
    return m;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2) return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

inline std::uint64_t training_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ULL + 0x747261696eULL; }

}  // namespace detail

struct StreamDetections {
    std::vector<eventsync::EventDetection> coarse;
    std::vector<eventsync::EventDetection> fine;
};

struct ClockEstimate {
    std::string device_id;
    StreamRole role = StreamRole::phone;
    Duration bulk_lag{0};
    std::size_t matched = 0;
    std::size_t refined = 0;
    std::size_t rejected = 0;  // pairs dropped as clock-fit outliers
    timebase::ClockModel model;  // local -> reference
    double true_offset_s = 0, true_drift = 0;

    Timestamp to_reference(Timestamp local) const { return local + from_seconds(model.correction_at(local)); }
};

struct SessionResult {
    std::string subject_id;
    std::map<StreamRole, StreamDetections> detections;
    std::vector<ClockEstimate> clocks;
};

/// Training: a DBA template from camera excerpts starting at each true onset,
/// a Baum-Welch HMM over IMU feature sequences, the video threshold midway
/// between matched and background window scores, and each modality's mean
/// onset bias of the fine stage.
inline TrainedDetectors train_detectors(const SyncScenarioSpec& spec, std::uint64_t seed, const SyncPipelineConfig& cfg) {
    SyncScenarioSpec tspec = spec;
    tspec.subjects = cfg.training_subjects;
    const SyncScenario train = generate_sync_scenario(tspec, detail::training_seed(seed));
    TrainedDetectors td;

    std::vector<eventsync::TimeSeries> excerpts;
    for (const auto& ses : train.sessions) {
        const auto z = detail::camera_series(ses.stream(StreamRole::camera));
        for (const auto& g : ses.gestures) {
            auto ex = z.slice(g.start, g.start + from_seconds(g.duration_s() + cfg.template_tail_s));
            ex.values = eventsync::rest_relative(ex.values);
            excerpts.push_back(std::move(ex));
        }
    }
    try {
        td.tmpl = eventsync::dba_template(excerpts, cfg.dba_iterations);
    } catch (const std::exception& e) {
        throw StageError("train", std::string("template: ") + e.what());
    }

    double worst_hit = 0.0, best_background = 1e300;
    for (const auto& ses : train.sessions) {
        const auto z = detail::camera_series(ses.stream(StreamRole::camera));
        const auto windows = eventsync::score_windows(z, td.tmpl, cfg.video_window, cfg.video_stride);
        for (const auto& w : windows) {
            bool near = false;
            for (const auto& g : ses.gestures) {
                const Timestamp g_end = g.start + from_seconds(g.duration_s());
                if (w.end > g.start - std::chrono::seconds(1) && w.start < g_end + std::chrono::seconds(1)) near = true;
            }
            if (!near) best_background = std::min(best_background, w.score);
        }
        for (const auto& g : ses.gestures) {
            double best = 1e300;
            for (const auto& w : windows)
                if (w.start <= g.start && w.end >= g.start + from_seconds(g.duration_s())) best = std::min(best, w.score);
            if (best < 1e300) worst_hit = std::max(worst_hit, best);
        }
    }
    td.tmpl.dtw_threshold = best_background < 1e300 ? 0.5 * (worst_hit + best_background) : 1.5 * worst_hit;
    if (!(worst_hit < best_background)) td.tmpl.dtw_threshold = 1.1 * worst_hit;

    std::vector<eventsync::ObservationSequence> obs;
    for (const auto& ses : train.sessions)
        for (StreamRole r : kImuRoles)
            obs.push_back(eventsync::feature_sequence(detail::imu_series(ses.stream(r))).observations);
    try {
        td.hmm = eventsync::canonical_order(
            eventsync::train_hmm(obs, cfg.hmm_states, cfg.hmm_iterations, detail::training_seed(seed) + 1).model);
    } catch (const std::exception& e) {
        throw StageError("train", std::string("hmm: ") + e.what());
    }

    if (cfg.calibrate_bias) {
        std::map<StreamRole, std::vector<double>> diffs;
        for (const auto& ses : train.sessions) {
            const auto z = detail::camera_series(ses.stream(StreamRole::camera));
            for (const auto& g : ses.gestures) {
                const auto r = eventsync::fine_tune_onset(z, g.start, cfg.fine_camera);
                if (!r.fallback) diffs[StreamRole::camera].push_back(to_seconds(r.refined - g.start));
            }
            for (StreamRole role : kImuRoles) {
                const auto& truth = ses.truth(role);
                const auto mag = detail::accel_magnitude(detail::imu_series(ses.stream(role)));
                for (const auto& g : ses.gestures) {
                    const Timestamp local = truth.local_at(g.start, ses.session_start);
                    const auto r = eventsync::fine_tune_onset(mag, local, cfg.fine_imu);
                    if (!r.fallback) diffs[role].push_back(to_seconds(r.refined - local));
                }
            }
        }
        for (const auto& [role, d] : diffs) td.onset_bias_s[role] = detail::median(d);
    }
    return td;
}

namespace detail {

/// Drops (local, reference) pairs far off a Theil-Sen line through all of them.
/// One bad onset, fed straight into the sequential fit, can tilt the drift by
/// more than the drift bound itself.
inline std::size_t reject_clock_outliers(std::vector<std::pair<Timestamp, Timestamp>>& pairs, double floor_s) {
    if (pairs.size() < 4) return 0;
    const Timestamp t0 = pairs.front().first;
    std::vector<double> x, y, slopes;
    for (const auto& [local, ref] : pairs) {
        x.push_back(to_seconds(local - t0));
        y.push_back(to_seconds(ref - local));
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            if (x[j] != x[i]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
    const double slope = slopes.empty() ? 0.0 : median(slopes);
    std::vector<double> icpt, resid;
    for (std::size_t i = 0; i < x.size(); ++i) icpt.push_back(y[i] - slope * x[i]);
    const double c = median(icpt);
    for (std::size_t i = 0; i < x.size(); ++i) resid.push_back(std::abs(y[i] - c - slope * x[i]));
    const double limit = std::max(floor_s, 5.0 * 1.4826 * median(resid));
    std::vector<std::pair<Timestamp, Timestamp>> kept;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (resid[i] <= limit) kept.push_back(pairs[i]);
    const std::size_t dropped = pairs.size() - kept.size();
    pairs = std::move(kept);
    return dropped;
}

}  // namespace detail

/// detect -> bulk lag + coarse match -> fine onset -> clock fit, for one session.
inline SessionResult run_sync_session(const SubjectSession& ses, const TrainedDetectors& td, const SyncPipelineConfig& cfg) {
    SessionResult out;
    out.subject_id = ses.subject_id;
    auto bias = [&](StreamRole r) {
        auto it = td.onset_bias_s.find(r);
        return from_seconds(it == td.onset_bias_s.end() ? 0.0 : it->second);
    };

    eventsync::TimeSeries z;
    try {
        z = detail::camera_series(ses.stream(StreamRole::camera));
        out.detections[StreamRole::camera].coarse =
            eventsync::detect_gesture_video(z, td.tmpl, cfg.video_window, cfg.video_stride, ses.truth(StreamRole::camera).device_id);
    } catch (const std::exception& e) {
        throw StageError("detect", ses.subject_id + " camera: " + e.what());
    }
    const auto& video = out.detections[StreamRole::camera].coarse;

    std::map<std::size_t, Timestamp> cam_refined;
    for (std::size_t i = 0; i < video.size(); ++i) {
        const auto r = eventsync::fine_tune_onset(z, video[i].start, cfg.fine_camera);
        if (r.fallback) continue;
        cam_refined[i] = r.refined - bias(StreamRole::camera);
        auto e = video[i];
        e.start = cam_refined[i];
        e.stage = eventsync::Stage::fine;
        out.detections[StreamRole::camera].fine.push_back(e);
    }

    for (StreamRole role : kImuRoles) {
        const auto& truth = ses.truth(role);
        eventsync::TimeSeries imu;
        std::vector<eventsync::EventDetection> ev;
        try {
            imu = detail::imu_series(ses.stream(role));
            ev = eventsync::detect_gesture_imu(imu, td.hmm, {}, truth.device_id);
        } catch (const std::exception& e) {
            throw StageError("detect", ses.subject_id + " " + to_string(role) + ": " + e.what());
        }
        out.detections[role].coarse = ev;

        ClockEstimate ce;
        ce.device_id = truth.device_id;
        ce.role = role;
        ce.true_offset_s = truth.offset_s;
        ce.true_drift = truth.drift;
        ce.bulk_lag = eventsync::estimate_bulk_lag(video, ev, cfg.coarse_tolerance, cfg.bulk_search);
        const auto matches = eventsync::coarse_align(video, ev, cfg.coarse_tolerance, -ce.bulk_lag);
        ce.matched = matches.size();
        if (matches.empty()) throw StageError("coarse", ses.subject_id + " " + to_string(role) + ": no events matched the camera");

        const auto mag = detail::accel_magnitude(imu);
        std::vector<std::pair<Timestamp, Timestamp>> pairs;
        for (const auto& m : matches) {
            auto cam = cam_refined.find(m.a);
            if (cam == cam_refined.end()) continue;
            const auto r = eventsync::fine_tune_onset(mag, ev[m.b].start, cfg.fine_imu);
            if (r.fallback) continue;
            const Timestamp local = r.refined - bias(role);
            pairs.emplace_back(local, cam->second);
            auto e = ev[m.b];
            e.start = local;
            e.stage = eventsync::Stage::fine;
            out.detections[role].fine.push_back(e);
        }
        ce.refined = pairs.size();
        if (pairs.empty()) throw StageError("fine", ses.subject_id + " " + to_string(role) + ": every onset fell back");
        std::sort(pairs.begin(), pairs.end());
        ce.rejected = detail::reject_clock_outliers(pairs, to_seconds(cfg.outlier_floor));
        try {
            ce.model = timebase::fit_clock(pairs);
        } catch (const std::exception& e) {
            throw StageError("apply", ses.subject_id + " " + to_string(role) + ": " + e.what());
        }
        out.clocks.push_back(ce);
    }
    return out;
}

struct ModalityTiming {
    std::string modality;
    eventsync::SyncErrors errors;
    std::size_t events = 0;
};

struct SyncReport {
    std::uint64_t seed = 0;
    std::map<std::string, DetectionScores> detection;  // video, imu
    std::vector<ModalityTiming> timing;               // camera, phone, wrist
    double raw_mae_s = 0, corrected_mae_s = 0, corrected_rmse_s = 0, reduction = 0;
    std::vector<SessionResult> sessions;
    TrainedDetectors detectors;
    double runtime_s = 0;
};

inline SyncReport run_sync_experiment(const SyncScenario& sc, const SyncPipelineConfig& cfg = {}) {
    SyncReport rep;
    rep.seed = sc.seed;
    rep.detectors = train_detectors(sc.spec, sc.seed, cfg);

    std::size_t video_tp = 0, video_pred = 0, video_truth = 0, imu_tp = 0, imu_pred = 0, imu_truth = 0;
    std::map<StreamRole, std::pair<std::vector<double>, std::vector<double>>> timing;  // truth, predicted
    double raw_sum = 0, cor_sum = 0, cor_sq = 0;
    std::size_t n_mis = 0;

    for (const auto& ses : sc.sessions) {
        SessionResult r = run_sync_session(ses, rep.detectors, cfg);

        // Detection accuracy in each stream's own clock.
        for (const auto& [role, det] : r.detections) {
            const auto& st = ses.truth(role);
            std::vector<eventsync::EventDetection> truth;
            for (const auto& g : ses.gestures) {
                const Timestamp l = st.local_at(g.start, ses.session_start);
                truth.push_back({st.device_id, l, l + from_seconds(g.duration_s()), 0.0, eventsync::Stage::coarse});
            }
            // Coarse IMU events are window-aligned; the bulk lag is not applied
            // here because the truth is already in local time.
            const auto sc_ = eventsync::eval_detection(det.coarse, truth, cfg.detection_tolerance).at("gesture");
            const bool cam = role == StreamRole::camera;
            (cam ? video_tp : imu_tp) += sc_.true_positives;
            (cam ? video_pred : imu_pred) += det.coarse.size();
            (cam ? video_truth : imu_truth) += truth.size();

            // Fine onset timing against truth, in reference time.
            const ClockEstimate* ce = nullptr;
            for (const auto& c : r.clocks)
                if (c.role == role) ce = &c;
            std::vector<eventsync::EventDetection> truth_ref;
            for (const auto& g : ses.gestures)
                truth_ref.push_back({st.device_id, g.start, g.start, 0.0, eventsync::Stage::coarse});
            std::vector<eventsync::EventDetection> fine_ref = det.fine;
            for (auto& e : fine_ref)
                if (ce) e.start = ce->to_reference(e.start);
            for (const auto& m : eventsync::coarse_align(truth_ref, fine_ref, cfg.coarse_tolerance)) {
                timing[role].first.push_back(truth_ref[m.a].start.seconds());
                timing[role].second.push_back(fine_ref[m.b].start.seconds());
            }
        }

        // Clock misalignment before and after, sampled at every true onset.
        for (const auto& ce : r.clocks) {
            const auto& st = ses.truth(ce.role);
            for (const auto& g : ses.gestures) {
                const Timestamp local = st.local_at(g.start, ses.session_start);
                raw_sum += std::abs(to_seconds(local - g.start));
                const double err = to_seconds(ce.to_reference(local) - g.start);
                cor_sum += std::abs(err);
                cor_sq += err * err;
                ++n_mis;
            }
        }
        rep.sessions.push_back(std::move(r));
    }

    rep.detection["video"] = make_scores(video_tp, video_pred, video_truth);
    rep.detection["imu"] = make_scores(imu_tp, imu_pred, imu_truth);
    for (StreamRole role : {StreamRole::camera, StreamRole::phone, StreamRole::wrist}) {
        const auto& [t, p] = timing[role];
        ModalityTiming mt{to_string(role), {}, t.size()};
        if (!t.empty()) mt.errors = eventsync::eval_sync(t, p);
        rep.timing.push_back(mt);
    }
    if (n_mis == 0) throw StageError("eval", "no misalignment samples");
    rep.raw_mae_s = raw_sum / static_cast<double>(n_mis);
    rep.corrected_mae_s = cor_sum / static_cast<double>(n_mis);
    rep.corrected_rmse_s = std::sqrt(cor_sq / static_cast<double>(n_mis));
    rep.reduction = rep.raw_mae_s > 0 ? 1.0 - rep.corrected_mae_s / rep.raw_mae_s : 0.0;
    return rep;
}

inline ojson scores_json(const DetectionScores& s) {
    return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"true_positives", s.true_positives},
            {"false_positives", s.false_positives}, {"false_negatives", s.false_negatives}};
}

inline ojson to_json(const SyncReport& r) {
    ojson j = report_header("sync_report", r.seed);
    ojson det = ojson::object();
    for (const auto& [k, s] : r.detection) det[k] = scores_json(s);
    j["detection"] = det;
    ojson tim = ojson::array();
    for (const auto& t : r.timing)
        tim.push_back({{"modality", t.modality}, {"events", t.events}, {"mae_s", t.errors.mae}, {"rmse_s", t.errors.rmse},
                       {"mto_s", t.errors.mto}});
    j["timing"] = tim;
    j["misalignment"] = {{"raw_mae_s", r.raw_mae_s},
                         {"corrected_mae_s", r.corrected_mae_s},
                         {"corrected_rmse_s", r.corrected_rmse_s},
                         {"reduction", r.reduction}};
    ojson clocks = ojson::array();
    for (const auto& s : r.sessions)
        for (const auto& c : s.clocks)
            clocks.push_back({{"device_id", c.device_id},
                              {"bulk_lag_s", to_seconds(c.bulk_lag)},
                              {"matched", c.matched},
                              {"refined", c.refined},
                              {"rejected", c.rejected},
                              {"offset_s", c.model.offset.count()},
                              {"drift", c.model.drift_rate},
                              {"anchor_ns", c.model.last_sync.ns},
                              {"true_offset_s", c.true_offset_s},
                              {"true_drift", c.true_drift}});
    j["clocks"] = clocks;
    ojson bias = ojson::object();
    for (const auto& [role, b] : r.detectors.onset_bias_s) bias[to_string(role)] = b;
    j["training"] = {{"template_length", r.detectors.tmpl.values.size()},
                     {"dtw_threshold", r.detectors.tmpl.dtw_threshold},
                     {"onset_bias_s", bias}};
    return j;
}

inline std::string sync_csv(const SyncReport& r) {
    std::ostringstream os;
    os << "section,modality,precision,recall,f1,mae_s,rmse_s,mto_s\n";
    for (const auto& [k, s] : r.detection)
        os << "detection," << k << ',' << csv_number(s.precision) << ',' << csv_number(s.recall) << ','
           << csv_number(s.f1) << ",,,\n";
    for (const auto& t : r.timing)
        os << "timing," << t.modality << ",,,," << csv_number(t.errors.mae) << ',' << csv_number(t.errors.rmse) << ','
           << csv_number(t.errors.mto) << '\n';
    os << "misalignment,raw,,,," << csv_number(r.raw_mae_s) << ",,\n";
    os << "misalignment,corrected,,,," << csv_number(r.corrected_mae_s) << ',' << csv_number(r.corrected_rmse_s) << ",\n";
    return os.str();
}

inline std::string sync_events_ndjson(const SyncReport& r) {
    std::ostringstream os;
    for (const auto& s : r.sessions)
        for (const auto& [role, d] : s.detections) {
            eventsync::write_events(os, d.coarse);
            eventsync::write_events(os, d.fine);
        }
    return os.str();
}

/// Everything a run writes: the scenario manifest it can be re-run from, and the report.
inline std::vector<OutputFile> sync_outputs(const SyncScenario& sc, const SyncReport& r, const SyncPipelineConfig& cfg) {
    ojson j = to_json(r);
    j["config"] = to_json(cfg);
    return {{"manifest.json", sync_manifest(sc).dump(2) + "\n"},
            {"sync_report.json", j.dump(2) + "\n"},
            {"sync_report.csv", sync_csv(r)},
            {"events.ndjson", sync_events_ndjson(r)}};
}

}  // namespace sass::harness
