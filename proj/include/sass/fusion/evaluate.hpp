#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <tuple>
#include <vector>

#include "sass/error.hpp"
#include "sass/fusion/dedup.hpp"
#include "sass/fusion/types.hpp"
#include "sass/scores.hpp"

namespace sass::fusion {

inline constexpr double kDefaultMatchRadius = 2.0;

struct Located {
    ObjectClass cls;
    Point2 center;
    Timestamp frame_ts;
};

inline Located locate(const Detection& d) { return {d.cls, d.center, d.frame_ts}; }
inline Located locate(const FusedDetection& d) { return {d.cls, d.center, d.frame_ts}; }

/// One-to-one matching per class and frame, closest pairs first, within `radius`.
template <class Pred>
std::map<ObjectClass, DetectionScores> evaluate_detections(const std::vector<Pred>& predicted,
                                                           const std::vector<Detection>& truth,
                                                           double radius = kDefaultMatchRadius) {
    if (!(radius > 0.0)) throw ConfigError("match radius must be positive");
    std::map<ObjectClass, DetectionScores> out;
    for (ObjectClass c : kAllClasses) {
        std::vector<Located> p, t;
        for (const auto& d : predicted)
            if (d.cls == c) p.push_back(locate(d));
        for (const auto& d : truth)
            if (d.cls == c) t.push_back(locate(d));
        std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t j = 0; j < t.size(); ++j) {
                if (p[i].frame_ts != t[j].frame_ts) continue;
                const double d = distance(p[i].center, t[j].center);
                if (d <= radius) cand.emplace_back(d, i, j);
            }
        std::sort(cand.begin(), cand.end());
        std::vector<bool> up(p.size()), ut(t.size());
        std::size_t tp = 0;
        for (const auto& [d, i, j] : cand) {
            if (up[i] || ut[j]) continue;
            up[i] = ut[j] = true;
            ++tp;
        }
        out[c] = make_scores(tp, p.size(), t.size());
    }
    return out;
}

/// Dedup per frame at one threshold.
inline std::vector<FusedDetection> fuse_frames(const std::vector<Detection>& top_view, double threshold) {
    std::map<Timestamp, std::vector<Detection>> frames;
    for (const auto& d : top_view) frames[d.frame_ts].push_back(d);
    std::vector<FusedDetection> out;
    for (const auto& [ts, dets] : frames) {
        auto f = deduplicate(dets, threshold);
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

struct SweepRow {
    double threshold = 0.0;
    ObjectClass cls = ObjectClass::pedestrian;
    DetectionScores scores;
    std::size_t fused_count = 0;
    std::size_t merged_away = 0;  // input detections absorbed into another
};

inline std::vector<SweepRow> threshold_sweep(const std::vector<Detection>& top_view, const std::vector<Detection>& truth,
                                             const std::vector<double>& thresholds,
                                             double radius = kDefaultMatchRadius) {
    if (thresholds.empty()) throw UsageError("threshold sweep needs at least one threshold");
    std::vector<SweepRow> rows;
    for (double th : thresholds) {
        const auto fused = fuse_frames(top_view, th);
        const auto scores = evaluate_detections(fused, truth, radius);
        for (ObjectClass c : kAllClasses) {
            SweepRow r{th, c, scores.at(c), 0, 0};
            std::size_t inputs = 0;
            for (const auto& d : top_view) inputs += d.cls == c;
            for (const auto& f : fused) r.fused_count += f.cls == c;
            r.merged_away = inputs - r.fused_count;
            rows.push_back(r);
        }
    }
    return rows;
}

/// Default sweep grid: 5.5 m down to 0 m in 0.5 m steps.
inline std::vector<double> default_sweep_thresholds() {
    std::vector<double> t;
    for (int k = 11; k >= 0; --k) t.push_back(0.5 * k);
    return t;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "threshold,class,precision,recall,f1,fused_count\n";
    for (const auto& r : rows)
        os << r.threshold << ',' << to_string(r.cls) << ',' << r.scores.precision << ',' << r.scores.recall << ','
           << r.scores.f1 << ',' << r.fused_count << '\n';
}

}  // namespace sass::fusion
