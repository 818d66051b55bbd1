#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "sass/error.hpp"
#include "sass/fusion/types.hpp"

namespace sass::fusion {

/// Merges same-class detections from different cameras closer than
/// `threshold` (strictly) on the top-view plane. Chains merge as one
/// connected component; the centre is the confidence-weighted mean and the
/// confidence the maximum. Input is one frame.
inline std::vector<FusedDetection> deduplicate(const std::vector<Detection>& dets, double threshold) {
    if (!(threshold >= 0.0)) throw ConfigError("dedup threshold must be non-negative");
    const std::size_t n = dets.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dets[i].cls != dets[j].cls || dets[i].camera_id == dets[j].camera_id) continue;
            if (distance(dets[i].center, dets[j].center) < threshold) {
                const std::size_t a = find(i), b = find(j);
                parent[std::max(a, b)] = std::min(a, b);
            }
        }

    std::map<std::size_t, std::vector<std::size_t>> groups;  // keyed by smallest member index
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<FusedDetection> out;
    for (const auto& [root, members] : groups) {
        FusedDetection f;
        f.cls = dets[root].cls;
        f.frame_ts = dets[root].frame_ts;
        f.threshold = threshold;
        f.merge_count = members.size();
        double wsum = 0.0, x = 0.0, y = 0.0, plain_x = 0.0, plain_y = 0.0;
        std::set<std::string> cams;
        for (std::size_t i : members) {
            const auto& d = dets[i];
            wsum += d.confidence;
            x += d.confidence * d.center.x;
            y += d.confidence * d.center.y;
            plain_x += d.center.x;
            plain_y += d.center.y;
            f.confidence = std::max(f.confidence, d.confidence);
            cams.insert(d.camera_id);
        }
        const double m = static_cast<double>(members.size());
        f.center = wsum > 0.0 ? Point2{x / wsum, y / wsum} : Point2{plain_x / m, plain_y / m};
        f.cameras.assign(cams.begin(), cams.end());
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace sass::fusion
