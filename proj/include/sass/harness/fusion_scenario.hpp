#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sass/error.hpp"
#include "sass/fusion.hpp"
#include "sass/harness/report.hpp"
#include "sass/time.hpp"

namespace sass::harness {

struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct CameraSpec {
    std::string id;
    double x = 0, y = 0, height = 10;  // metres
    double look_x = 0, look_y = 0;     // ground point on the optical axis
};

/// Two street cameras at perpendicular azimuths over a square intersection.
/// Ground truth is every object in the scene square (the overhead view).
struct FusionScenarioSpec {
    std::size_t frames = 300;
    double frame_rate_hz = 10.0;
    double half_extent = 25.0;  // scene is [-h, h]^2 metres
    std::size_t pedestrians = 16, vehicles = 6;
    double pedestrian_speed_min = 0.8, pedestrian_speed_max = 1.6;
    double vehicle_speed_min = 6.0, vehicle_speed_max = 12.0;
    double lane_offset = 3.5;
    double vehicle_length = 4.5, vehicle_width = 1.9;

    std::vector<CameraSpec> cameras{{"cam_a", -40.0, 0.0, 10.0, 0.0, 0.0}, {"cam_b", 0.0, -40.0, 10.0, 0.0, 0.0}};
    double focal_px = 1800.0;
    int image_width = 3840, image_height = 2160;
    // Kiosks, shelters and planters; each hides a different patch from each camera.
    std::vector<Rect> occluders{{-15.0, 7.0, -9.0, 13.0}, {6.0, -13.5, 14.0, -10.5}, {9.5, 9.5, 14.5, 14.5},
                                {-14.0, -14.0, -8.0, -8.0}, {-2.0, 16.0, 4.0, 19.0},   {16.0, -3.0, 19.0, 3.0}};
    bool vehicle_occlusion = true;
    double occluded_visibility = 0.25;  // detection chance behind a vehicle

    double pedestrian_miss = 0.08, vehicle_miss = 0.04;
    double falloff_start_m = 35.0, falloff_end_m = 70.0, falloff_floor = 0.4;
    double pedestrian_pixel_sigma = 3.0, vehicle_pixel_sigma = 6.0;
    double vehicle_contact_fraction = 0.5;  // box bottom-centre sits this far toward the camera
    double pedestrian_fp_rate = 0.6, vehicle_fp_rate = 0.25;  // per camera per frame
    double true_confidence_min = 0.5, true_confidence_max = 0.98;
    double fp_confidence_min = 0.2, fp_confidence_max = 0.6;

    std::size_t calibration_points = 400;
    double calibration_pixel_sigma = 1.0;

    void validate() const {
        if (frames == 0 || !(frame_rate_hz > 0.0)) throw ConfigError("need at least one frame at a positive rate");
        if (!(half_extent > 0.0)) throw ConfigError("scene extent must be positive");
        if (cameras.empty()) throw ConfigError("need at least one camera");
        if (!(focal_px > 0.0) || image_width <= 0 || image_height <= 0) throw ConfigError("bad camera intrinsics");
        for (const auto& c : cameras) {
            if (c.id.empty()) throw ConfigError("camera id must not be empty");
            if (!(c.height > 0.0)) throw ConfigError("camera height must be positive");
        }
        auto prob = [](double p, const char* what) {
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + " outside [0,1]");
        };
        prob(pedestrian_miss, "pedestrian_miss");
        prob(vehicle_miss, "vehicle_miss");
        prob(occluded_visibility, "occluded_visibility");
        prob(falloff_floor, "falloff_floor");
        if (pedestrian_fp_rate < 0.0 || vehicle_fp_rate < 0.0) throw ConfigError("false-positive rates must be >= 0");
        if (pedestrian_pixel_sigma < 0.0 || vehicle_pixel_sigma < 0.0 || calibration_pixel_sigma < 0.0)
            throw ConfigError("pixel noise must be >= 0");
        if (!(pedestrian_speed_min > 0.0 && pedestrian_speed_min <= pedestrian_speed_max) ||
            !(vehicle_speed_min > 0.0 && vehicle_speed_min <= vehicle_speed_max))
            throw ConfigError("speed ranges must be positive and ordered");
        if (calibration_points < 4) throw ConfigError("need at least 4 calibration points");
    }

    /// No occlusion, no noise, full coverage: every camera sees every object exactly.
    FusionScenarioSpec ideal() const {
        FusionScenarioSpec s = *this;
        s.occluders.clear();
        s.vehicle_occlusion = false;
        s.pedestrian_miss = s.vehicle_miss = 0.0;
        s.falloff_floor = 1.0;
        s.pedestrian_pixel_sigma = s.vehicle_pixel_sigma = s.calibration_pixel_sigma = 0.0;
        s.vehicle_contact_fraction = 0.0;
        s.pedestrian_fp_rate = s.vehicle_fp_rate = 0.0;
        s.focal_px = 900.0;
        return s;
    }
};

inline ojson to_json(const FusionScenarioSpec& s) {
    ojson cams = ojson::array();
    for (const auto& c : s.cameras)
        cams.push_back({{"id", c.id}, {"x", c.x}, {"y", c.y}, {"height", c.height}, {"look_x", c.look_x}, {"look_y", c.look_y}});
    ojson occ = ojson::array();
    for (const auto& r : s.occluders) occ.push_back(ojson::array({r.x0, r.y0, r.x1, r.y1}));
    return {{"frames", s.frames},
            {"frame_rate_hz", s.frame_rate_hz},
            {"half_extent", s.half_extent},
            {"pedestrians", s.pedestrians},
            {"vehicles", s.vehicles},
            {"pedestrian_speed_min", s.pedestrian_speed_min},
            {"pedestrian_speed_max", s.pedestrian_speed_max},
            {"vehicle_speed_min", s.vehicle_speed_min},
            {"vehicle_speed_max", s.vehicle_speed_max},
            {"lane_offset", s.lane_offset},
            {"vehicle_length", s.vehicle_length},
            {"vehicle_width", s.vehicle_width},
            {"cameras", cams},
            {"focal_px", s.focal_px},
            {"image_width", s.image_width},
            {"image_height", s.image_height},
            {"occluders", occ},
            {"vehicle_occlusion", s.vehicle_occlusion},
            {"occluded_visibility", s.occluded_visibility},
            {"pedestrian_miss", s.pedestrian_miss},
            {"vehicle_miss", s.vehicle_miss},
            {"falloff_start_m", s.falloff_start_m},
            {"falloff_end_m", s.falloff_end_m},
            {"falloff_floor", s.falloff_floor},
            {"pedestrian_pixel_sigma", s.pedestrian_pixel_sigma},
            {"vehicle_pixel_sigma", s.vehicle_pixel_sigma},
            {"vehicle_contact_fraction", s.vehicle_contact_fraction},
            {"pedestrian_fp_rate", s.pedestrian_fp_rate},
            {"vehicle_fp_rate", s.vehicle_fp_rate},
            {"true_confidence_min", s.true_confidence_min},
            {"true_confidence_max", s.true_confidence_max},
            {"fp_confidence_min", s.fp_confidence_min},
            {"fp_confidence_max", s.fp_confidence_max},
            {"calibration_points", s.calibration_points},
            {"calibration_pixel_sigma", s.calibration_pixel_sigma}};
}

inline FusionScenarioSpec fusion_spec_from_json(const ojson& j) {
    if (!j.is_object()) throw ConfigError("fusion scenario spec must be an object");
    const ojson defaults = to_json(FusionScenarioSpec{});
    for (const auto& [k, v] : j.items())
        if (!defaults.contains(k)) throw ConfigError("unknown fusion scenario key: " + k);
    ojson m = defaults;
    m.update(j);
    FusionScenarioSpec s;
    try {
        s.frames = m["frames"];
        s.frame_rate_hz = m["frame_rate_hz"];
        s.half_extent = m["half_extent"];
        s.pedestrians = m["pedestrians"];
        s.vehicles = m["vehicles"];
        s.pedestrian_speed_min = m["pedestrian_speed_min"];
        s.pedestrian_speed_max = m["pedestrian_speed_max"];
        s.vehicle_speed_min = m["vehicle_speed_min"];
        s.vehicle_speed_max = m["vehicle_speed_max"];
        s.lane_offset = m["lane_offset"];
        s.vehicle_length = m["vehicle_length"];
        s.vehicle_width = m["vehicle_width"];
        s.cameras.clear();
        for (const auto& c : m["cameras"])
            s.cameras.push_back({c.at("id"), c.at("x"), c.at("y"), c.at("height"), c.value("look_x", 0.0), c.value("look_y", 0.0)});
        s.focal_px = m["focal_px"];
        s.image_width = m["image_width"];
        s.image_height = m["image_height"];
        s.occluders.clear();
        for (const auto& r : m["occluders"]) {
            if (!r.is_array() || r.size() != 4) throw ConfigError("occluder must be [x0, y0, x1, y1]");
            const double x0 = r[0], y0 = r[1], x1 = r[2], y1 = r[3];
            s.occluders.push_back({std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)});
        }
        s.vehicle_occlusion = m["vehicle_occlusion"];
        s.occluded_visibility = m["occluded_visibility"];
        s.pedestrian_miss = m["pedestrian_miss"];
        s.vehicle_miss = m["vehicle_miss"];
        s.falloff_start_m = m["falloff_start_m"];
        s.falloff_end_m = m["falloff_end_m"];
        s.falloff_floor = m["falloff_floor"];
        s.pedestrian_pixel_sigma = m["pedestrian_pixel_sigma"];
        s.vehicle_pixel_sigma = m["vehicle_pixel_sigma"];
        s.vehicle_contact_fraction = m["vehicle_contact_fraction"];
        s.pedestrian_fp_rate = m["pedestrian_fp_rate"];
        s.vehicle_fp_rate = m["vehicle_fp_rate"];
        s.true_confidence_min = m["true_confidence_min"];
        s.true_confidence_max = m["true_confidence_max"];
        s.fp_confidence_min = m["fp_confidence_min"];
        s.fp_confidence_max = m["fp_confidence_max"];
        s.calibration_points = m["calibration_points"];
        s.calibration_pixel_sigma = m["calibration_pixel_sigma"];
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad fusion scenario: ") + e.what());
    }
    s.validate();
    return s;
}

/// Pinhole camera over the ground plane z = 0.
struct CameraModel {
    std::string id;
    Eigen::Vector3d center;
    Eigen::Matrix3d R;  // rows: right, down, forward
    Eigen::Matrix3d K;
    int width = 0, height = 0;

    fusion::Homography ground_to_image() const {
        Eigen::Matrix3d M;
        M.col(0) = R.col(0);
        M.col(1) = R.col(1);
        M.col(2) = -R * center;
        fusion::Homography H = K * M;
        return H / H(2, 2);
    }
    /// False when the point is behind the camera or outside the frame.
    bool project(const fusion::Point2& g, fusion::Point2& px) const {
        const Eigen::Vector3d c = R * (Eigen::Vector3d(g.x, g.y, 0.0) - center);
        if (!(c.z() > 0.1)) return false;
        const Eigen::Vector3d p = K * c;
        px = {p.x() / p.z(), p.y() / p.z()};
        return px.x >= 0.0 && px.x < width && px.y >= 0.0 && px.y < height;
    }
};

inline CameraModel make_camera(const CameraSpec& c, double focal, int width, int height) {
    CameraModel m;
    m.id = c.id;
    m.width = width;
    m.height = height;
    m.center = {c.x, c.y, c.height};
    const Eigen::Vector3d f = (Eigen::Vector3d(c.look_x, c.look_y, 0.0) - m.center).normalized();
    const Eigen::Vector3d right = f.cross(Eigen::Vector3d::UnitZ());
    if (right.norm() < 1e-9) throw ConfigError("camera " + c.id + " looks straight down");
    const Eigen::Vector3d r = right.normalized();
    const Eigen::Vector3d d = f.cross(r);
    m.R.row(0) = r.transpose();
    m.R.row(1) = d.transpose();
    m.R.row(2) = f.transpose();
    m.K << focal, 0.0, width / 2.0, 0.0, focal, height / 2.0, 0.0, 0.0, 1.0;
    return m;
}

struct ObjectState {
    int id = 0;
    fusion::ObjectClass cls = fusion::ObjectClass::pedestrian;
    fusion::Point2 position;
    double heading = 0.0;  // radians
};

/// One camera detection in image coordinates; `object` is -1 for a false positive.
struct ImageDetection {
    fusion::Detection det;
    int object = -1;
};

struct FusionScenario {
    FusionScenarioSpec spec;
    std::uint64_t seed = 0;
    std::vector<CameraModel> cameras;
    std::vector<std::vector<fusion::PointPair>> calibration;  // per camera, image -> ground
    std::vector<Timestamp> frames;
    std::vector<std::vector<ObjectState>> truth;  // per frame
    std::vector<ImageDetection> detections;

    std::vector<fusion::Detection> truth_detections() const {
        std::vector<fusion::Detection> out;
        for (std::size_t k = 0; k < frames.size(); ++k)
            for (const auto& o : truth[k]) out.push_back({"truth", o.cls, o.position, 1.0, frames[k]});
        return out;
    }
    std::vector<fusion::Detection> image_detections(const std::string& camera) const {
        std::vector<fusion::Detection> out;
        for (const auto& d : detections)
            if (d.det.camera_id == camera) out.push_back(d.det);
        return out;
    }
};

namespace detail {

inline bool segment_hits_rect(const fusion::Point2& a, const fusion::Point2& b, const Rect& r) {
    // Liang-Barsky clip of the segment against the rectangle.
    double t0 = 0.0, t1 = 1.0;
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - r.x0, r.x1 - a.x, a.y - r.y0, r.y1 - a.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return false;
            continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0.0) t0 = std::max(t0, t);
        else t1 = std::min(t1, t);
        if (t0 > t1) return false;
    }
    return true;
}

/// True when a vehicle other than `self` stands between the camera and `target`.
inline bool behind_vehicle(const fusion::Point2& cam, const ObjectState& target, const std::vector<ObjectState>& objects,
                           double half_width) {
    const double len = distance(cam, target.position);
    for (const auto& o : objects) {
        if (o.id == target.id || o.cls != fusion::ObjectClass::vehicle) continue;
        const double ux = (target.position.x - cam.x) / len, uy = (target.position.y - cam.y) / len;
        const double along = (o.position.x - cam.x) * ux + (o.position.y - cam.y) * uy;
        if (along <= 0.0 || along >= len - 1.0) continue;
        const double across = std::abs(-(o.position.x - cam.x) * uy + (o.position.y - cam.y) * ux);
        if (across < half_width) return true;
    }
    return false;
}

}  // namespace detail

inline FusionScenario generate_fusion_scenario(const FusionScenarioSpec& spec, std::uint64_t seed) {
    spec.validate();
    using fusion::ObjectClass;
    using fusion::Point2;
    FusionScenario sc;
    sc.spec = spec;
    sc.seed = seed;
    for (const auto& c : spec.cameras) sc.cameras.push_back(make_camera(c, spec.focal_px, spec.image_width, spec.image_height));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    const double h = spec.half_extent;
    auto uniform_point = [&] { return Point2{(2.0 * U(rng) - 1.0) * h, (2.0 * U(rng) - 1.0) * h}; };

    // Calibration landmarks: surveyed ground points and their noisy pixels.
    for (const auto& cam : sc.cameras) {
        std::vector<fusion::PointPair> pairs;
        for (std::size_t guard = 0; pairs.size() < spec.calibration_points && guard < 100 * spec.calibration_points; ++guard) {
            const Point2 g = uniform_point();
            Point2 px;
            if (!cam.project(g, px)) continue;
            px.x += spec.calibration_pixel_sigma * N(rng);
            px.y += spec.calibration_pixel_sigma * N(rng);
            pairs.push_back({px, g});
        }
        if (pairs.size() < 4) throw ConfigError("camera " + cam.id + " sees too little of the scene to calibrate");
        sc.calibration.push_back(std::move(pairs));
    }

    struct Mover {
        ObjectState s;
        double speed = 0.0;
        Point2 waypoint;
    };
    std::vector<Mover> movers;
    int next_id = 0;
    auto speed = [&](double lo, double hi) { return lo + (hi - lo) * U(rng); };
    for (std::size_t i = 0; i < spec.pedestrians; ++i) {
        Mover m;
        m.s = {next_id++, ObjectClass::pedestrian, uniform_point(), 0.0};
        m.speed = speed(spec.pedestrian_speed_min, spec.pedestrian_speed_max);
        m.waypoint = uniform_point();
        movers.push_back(m);
    }
    for (std::size_t i = 0; i < spec.vehicles; ++i) {
        // Lanes: eastbound, westbound, northbound, southbound, in turn.
        static constexpr double kHeading[4] = {0.0, std::numbers::pi, std::numbers::pi / 2, -std::numbers::pi / 2};
        const int lane = static_cast<int>(i % 4);
        const double along = (2.0 * U(rng) - 1.0) * h;
        Mover m;
        m.s.id = next_id++;
        m.s.cls = ObjectClass::vehicle;
        m.s.heading = kHeading[lane];
        const double off = spec.lane_offset;
        m.s.position = lane == 0 ? Point2{along, -off} : lane == 1 ? Point2{along, off} : lane == 2 ? Point2{off, along} : Point2{-off, along};
        m.speed = speed(spec.vehicle_speed_min, spec.vehicle_speed_max);
        movers.push_back(m);
    }

    const double dt = 1.0 / spec.frame_rate_hz;
    for (std::size_t k = 0; k < spec.frames; ++k) {
        const Timestamp ts = Timestamp{} + from_seconds(static_cast<double>(k) * dt);
        sc.frames.push_back(ts);
        std::vector<ObjectState> objects;
        for (const auto& m : movers) objects.push_back(m.s);

        for (std::size_t ci = 0; ci < sc.cameras.size(); ++ci) {
            const auto& cam = sc.cameras[ci];
            const Point2 cam_xy{cam.center.x(), cam.center.y()};
            for (const auto& o : objects) {
                const bool ped = o.cls == ObjectClass::pedestrian;
                Point2 contact = o.position;
                if (!ped && spec.vehicle_contact_fraction > 0.0) {
                    // Nearest face of the box along the viewing ray.
                    const double d = distance(cam_xy, o.position);
                    const double ux = (cam_xy.x - o.position.x) / d, uy = (cam_xy.y - o.position.y) / d;
                    const double hx = std::cos(o.heading), hy = std::sin(o.heading);
                    const double support = 0.5 * spec.vehicle_length * std::abs(ux * hx + uy * hy) +
                                           0.5 * spec.vehicle_width * std::abs(-ux * hy + uy * hx);
                    contact = {o.position.x + spec.vehicle_contact_fraction * support * ux,
                               o.position.y + spec.vehicle_contact_fraction * support * uy};
                }
                Point2 px;
                const bool in_view = cam.project(contact, px);
                double p = 1.0 - (ped ? spec.pedestrian_miss : spec.vehicle_miss);
                const double range = distance(cam_xy, o.position);
                if (range > spec.falloff_start_m) {
                    const double u = std::clamp((range - spec.falloff_start_m) / (spec.falloff_end_m - spec.falloff_start_m), 0.0, 1.0);
                    p *= 1.0 - u * (1.0 - spec.falloff_floor);
                }
                bool blocked = false;
                for (const auto& r : spec.occluders) blocked = blocked || detail::segment_hits_rect(cam_xy, o.position, r);
                if (!blocked && spec.vehicle_occlusion && detail::behind_vehicle(cam_xy, o, objects, 0.5 * spec.vehicle_width))
                    p *= spec.occluded_visibility;
                // Draw every variate regardless of outcome so streams stay aligned across specs.
                const double draw = U(rng), conf = U(rng), nx = N(rng), ny = N(rng);
                if (!in_view || blocked || draw >= p) continue;
                const double sigma = ped ? spec.pedestrian_pixel_sigma : spec.vehicle_pixel_sigma;
                ImageDetection d;
                d.object = o.id;
                d.det = {cam.id, o.cls, {px.x + sigma * nx, px.y + sigma * ny},
                         spec.true_confidence_min + (spec.true_confidence_max - spec.true_confidence_min) * conf, ts};
                sc.detections.push_back(d);
            }
            for (ObjectClass cls : fusion::kAllClasses) {
                std::poisson_distribution<int> count(cls == ObjectClass::pedestrian ? spec.pedestrian_fp_rate : spec.vehicle_fp_rate);
                const int n = count(rng);
                for (int f = 0; f < n; ++f) {
                    Point2 px;
                    Point2 g;
                    int guard = 0;
                    do {
                        g = uniform_point();
                    } while (!cam.project(g, px) && ++guard < 100);
                    if (guard >= 100) continue;
                    ImageDetection d;
                    d.det = {cam.id, cls, px, spec.fp_confidence_min + (spec.fp_confidence_max - spec.fp_confidence_min) * U(rng), ts};
                    sc.detections.push_back(d);
                }
            }
        }
        sc.truth.push_back(std::move(objects));

        for (auto& m : movers) {
            if (m.s.cls == ObjectClass::pedestrian) {
                const double dx = m.waypoint.x - m.s.position.x, dy = m.waypoint.y - m.s.position.y;
                const double d = std::hypot(dx, dy);
                const double step = m.speed * dt;
                if (d <= step) {
                    m.s.position = m.waypoint;
                    m.waypoint = uniform_point();
                } else {
                    m.s.position = {m.s.position.x + step * dx / d, m.s.position.y + step * dy / d};
                }
                m.s.heading = std::atan2(dy, dx);
            } else {
                auto wrap = [h](double v) { return v > h ? v - 2.0 * h : v < -h ? v + 2.0 * h : v; };
                m.s.position = {wrap(m.s.position.x + m.speed * dt * std::cos(m.s.heading)),
                                wrap(m.s.position.y + m.speed * dt * std::sin(m.s.heading))};
            }
        }
    }
    return sc;
}

/// Ground truth, true homographies and the recipe to regenerate the data.
inline ojson fusion_manifest(const FusionScenario& sc) {
    ojson j = report_header("fusion_scenario", sc.seed);
    j["spec"] = to_json(sc.spec);
    ojson cams = ojson::array();
    for (std::size_t i = 0; i < sc.cameras.size(); ++i) {
        const auto H = sc.cameras[i].ground_to_image();
        ojson rows = ojson::array();
        for (int r = 0; r < 3; ++r) rows.push_back(ojson::array({H(r, 0), H(r, 1), H(r, 2)}));
        ojson cal = ojson::array();
        for (const auto& p : sc.calibration[i]) cal.push_back(ojson::array({p.source.x, p.source.y, p.target.x, p.target.y}));
        cams.push_back({{"id", sc.cameras[i].id}, {"ground_to_image", rows}, {"calibration_image_to_ground", cal}});
    }
    j["cameras"] = cams;
    ojson frames = ojson::array();
    for (std::size_t k = 0; k < sc.frames.size(); ++k) {
        ojson objs = ojson::array();
        for (const auto& o : sc.truth[k])
            objs.push_back({{"id", o.id}, {"class", fusion::to_string(o.cls)}, {"x", o.position.x}, {"y", o.position.y}});
        frames.push_back({{"frame_ts_ns", sc.frames[k].ns}, {"objects", objs}});
    }
    j["truth"] = frames;
    return j;
}

inline std::string fusion_detections_ndjson(const FusionScenario& sc) {
    std::string out;
    for (const auto& d : sc.detections) {
        ojson j{{"camera_id", d.det.camera_id},
                {"class", fusion::to_string(d.det.cls)},
                {"u", d.det.center.x},
                {"v", d.det.center.y},
                {"confidence", d.det.confidence},
                {"frame_ts_ns", d.det.frame_ts.ns},
                {"object", d.object}};
        out += j.dump() + "\n";
    }
    return out;
}

/// Regenerates from the manifest recipe and checks it against the recorded truth.
inline FusionScenario fusion_scenario_from_manifest(const ojson& j) {
    if (j.value("kind", "") != "fusion_scenario") throw ConfigError("not a fusion scenario manifest");
    FusionScenario sc = generate_fusion_scenario(fusion_spec_from_json(j.at("spec")), j.at("seed").get<std::uint64_t>());
    const ojson again = fusion_manifest(sc);
    if (again.at("truth") != j.at("truth") || again.at("cameras") != j.at("cameras"))
        throw IntegrityError("fusion manifest does not match its regenerated scenario");
    return sc;
}

}  // namespace sass::harness
