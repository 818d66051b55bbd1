#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sass/error.hpp"
#include "sass/fusion/homography.hpp"
#include "sass/fusion/transform_net.hpp"
#include "sass/fusion/types.hpp"

namespace sass::fusion {

inline constexpr int kTransformFormatVersion = 1;

enum class TransformKind { homography, learned };

struct PerspectiveTransform {
    TransformKind kind = TransformKind::homography;
    Homography matrix = Homography::Identity();
    TransformNet net;

    static PerspectiveTransform from_homography(const Homography& H) {
        PerspectiveTransform t;
        t.matrix = H / H(2, 2);
        t.validate();
        return t;
    }
    static PerspectiveTransform from_net(TransformNet n) {
        PerspectiveTransform t;
        t.kind = TransformKind::learned;
        t.net = std::move(n);
        t.validate();
        return t;
    }

    void validate() const {
        if (kind == TransformKind::homography) {
            if (!matrix.allFinite() || std::abs(matrix.determinant()) <= kMinHomographyDet)
                throw ValidationError("homography is singular or non-finite");
        } else if (net.layers() == 0 || !net.finite()) {
            throw ValidationError("learned transform has no finite weights");
        }
    }

    /// False when a homography sends the point to infinity.
    bool map(const Point2& p, Point2& out) const {
        if (kind == TransformKind::homography) return apply_homography(matrix, p, out);
        out = net.apply(p);
        return std::isfinite(out.x) && std::isfinite(out.y);
    }
};

struct ProjectionResult {
    std::vector<Detection> projected;
    std::vector<std::size_t> dropped;  // input indices that could not be mapped
};

inline ProjectionResult project(const std::vector<Detection>& detections, const PerspectiveTransform& t) {
    t.validate();
    ProjectionResult r;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        Detection d = detections[i];
        if (!t.map(detections[i].center, d.center)) {
            r.dropped.push_back(i);
            continue;
        }
        r.projected.push_back(d);
    }
    return r;
}

inline nlohmann::json to_json(const PerspectiveTransform& t) {
    nlohmann::json j{{"version", kTransformFormatVersion}};
    if (t.kind == TransformKind::homography) {
        j["kind"] = "homography";
        std::vector<std::vector<double>> rows(3, std::vector<double>(3));
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) rows[r][c] = t.matrix(r, c);
        j["matrix"] = rows;
    } else {
        j["kind"] = "learned";
        j["network"] = to_json(t.net);
    }
    return j;
}

inline PerspectiveTransform transform_from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<int>() != kTransformFormatVersion) throw ValidationError("unsupported transform version");
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "homography") {
            const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
            if (rows.size() != 3) throw ValidationError("homography must be 3x3");
            Homography H;
            for (int r = 0; r < 3; ++r) {
                if (rows[r].size() != 3) throw ValidationError("homography must be 3x3");
                for (int c = 0; c < 3; ++c) H(r, c) = rows[r][c];
            }
            return PerspectiveTransform::from_homography(H);
        }
        if (kind == "learned") return PerspectiveTransform::from_net(net_from_json(j.at("network")));
        throw ValidationError("unknown transform kind: " + kind);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad transform record: ") + e.what());
    }
}

}  // namespace sass::fusion
