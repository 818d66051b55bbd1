#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sass/error.hpp"
#include "sass/harness/report.hpp"
#include "sass/time.hpp"
#include "sass/timebase/sample.hpp"

namespace sass::harness {

enum class StreamRole { camera, phone, wrist };

inline std::string to_string(StreamRole r) {
    switch (r) {
        case StreamRole::camera: return "camera";
        case StreamRole::phone: return "phone";
        case StreamRole::wrist: return "wrist";
    }
    return "?";
}

inline StreamRole parse_role(const std::string& s) {
    if (s == "camera") return StreamRole::camera;
    if (s == "phone") return StreamRole::phone;
    if (s == "wrist") return StreamRole::wrist;
    throw ConfigError("unknown stream role: " + s);
}

inline constexpr StreamRole kImuRoles[] = {StreamRole::phone, StreamRole::wrist};

/// Generator parameters. Defaults describe a moderate-noise session; none of
/// them are measured values.
struct SyncScenarioSpec {
    int subjects = 8;
    int gestures_per_subject = 8;
    double lead_in_s = 8.0;
    double tail_s = 8.0;
    double spacing_min_s = 16.0, spacing_max_s = 24.0;

    double camera_rate_hz = 30.0, phone_rate_hz = 100.0, wrist_rate_hz = 50.0;
    double offset_min_s = 0.2, offset_max_s = 0.6;  // magnitude; sign is random
    double max_drift = 1e-4;
    std::map<std::string, double> offset_override;  // role -> signed seconds, applied to every subject

    double rise_s = 0.5, hold_s = 1.5, drop_s = 0.5;
    double duration_jitter = 0.15;  // per-subject multiplicative spread
    double amplitude = 0.6, amplitude_jitter = 0.1;

    double burst_amplitude = 0.3;   // tremor per sinusoid on top of the hand acceleration, m/s^2
    double gyro_amplitude = 0.5;    // per sinusoid, rad/s
    double burst_min_hz = 1.0, burst_max_hz = 4.0;
    double phone_gain = 0.6;

    double camera_noise = 0.01;     // z units
    double accel_noise = 0.05;      // m/s^2
    double gyro_noise = 0.02;       // rad/s
    double timestamp_jitter_s = 0.001;

    void validate() const {
        if (subjects < 1 || gestures_per_subject < 1) throw ConfigError("need at least one subject and one gesture");
        if (!(spacing_min_s > rise_s * (1 + duration_jitter) + hold_s * (1 + duration_jitter) + drop_s + 4.0) ||
            spacing_max_s < spacing_min_s)
            throw ConfigError("gesture spacing too small for the gesture duration");
        for (double r : {camera_rate_hz, phone_rate_hz, wrist_rate_hz})
            if (!(r > 0.0)) throw ConfigError("stream rates must be positive");
        if (offset_min_s < 0 || offset_max_s < offset_min_s) throw ConfigError("bad offset range");
        if (!(std::abs(max_drift) < 0.01)) throw ConfigError("drift bound must be < 1%");
        if (!(duration_jitter >= 0.0 && duration_jitter < 0.5)) throw ConfigError("duration_jitter must be in [0, 0.5)");
        for (double n : {camera_noise, accel_noise, gyro_noise, timestamp_jitter_s})
            if (n < 0) throw ConfigError("noise levels must be >= 0");
        for (const auto& [role, v] : offset_override) {
            (void)v;
            if (parse_role(role) == StreamRole::camera) throw ConfigError("the camera is the reference clock");
        }
        const double min_period = 1.0 / std::max({camera_rate_hz, phone_rate_hz, wrist_rate_hz});
        if (timestamp_jitter_s * 3.0 >= min_period / 2.0) throw ConfigError("timestamp jitter too large for the sample rate");
    }

    SyncScenarioSpec noise_free() const {
        SyncScenarioSpec s = *this;
        s.camera_noise = s.accel_noise = s.gyro_noise = s.timestamp_jitter_s = 0.0;
        return s;
    }
};

inline ojson to_json(const SyncScenarioSpec& s) {
    ojson j{{"subjects", s.subjects},
            {"gestures_per_subject", s.gestures_per_subject},
            {"lead_in_s", s.lead_in_s},
            {"tail_s", s.tail_s},
            {"spacing_min_s", s.spacing_min_s},
            {"spacing_max_s", s.spacing_max_s},
            {"camera_rate_hz", s.camera_rate_hz},
            {"phone_rate_hz", s.phone_rate_hz},
            {"wrist_rate_hz", s.wrist_rate_hz},
            {"offset_min_s", s.offset_min_s},
            {"offset_max_s", s.offset_max_s},
            {"max_drift", s.max_drift},
            {"offset_override", s.offset_override},
            {"rise_s", s.rise_s},
            {"hold_s", s.hold_s},
            {"drop_s", s.drop_s},
            {"duration_jitter", s.duration_jitter},
            {"amplitude", s.amplitude},
            {"amplitude_jitter", s.amplitude_jitter},
            {"burst_amplitude", s.burst_amplitude},
            {"gyro_amplitude", s.gyro_amplitude},
            {"burst_min_hz", s.burst_min_hz},
            {"burst_max_hz", s.burst_max_hz},
            {"phone_gain", s.phone_gain},
            {"camera_noise", s.camera_noise},
            {"accel_noise", s.accel_noise},
            {"gyro_noise", s.gyro_noise},
            {"timestamp_jitter_s", s.timestamp_jitter_s}};
    return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline SyncScenarioSpec sync_spec_from_json(const ojson& j) {
    SyncScenarioSpec s;
    const ojson defaults = to_json(s);
    for (const auto& [k, v] : j.items())
        if (!defaults.contains(k)) throw ConfigError("unknown sync scenario key: " + k);
    ojson m = defaults;
    m.update(j);
    try {
        s.subjects = m["subjects"];
        s.gestures_per_subject = m["gestures_per_subject"];
        s.lead_in_s = m["lead_in_s"];
        s.tail_s = m["tail_s"];
        s.spacing_min_s = m["spacing_min_s"];
        s.spacing_max_s = m["spacing_max_s"];
        s.camera_rate_hz = m["camera_rate_hz"];
        s.phone_rate_hz = m["phone_rate_hz"];
        s.wrist_rate_hz = m["wrist_rate_hz"];
        s.offset_min_s = m["offset_min_s"];
        s.offset_max_s = m["offset_max_s"];
        s.max_drift = m["max_drift"];
        s.offset_override = m["offset_override"].get<std::map<std::string, double>>();
        s.rise_s = m["rise_s"];
        s.hold_s = m["hold_s"];
        s.drop_s = m["drop_s"];
        s.duration_jitter = m["duration_jitter"];
        s.amplitude = m["amplitude"];
        s.amplitude_jitter = m["amplitude_jitter"];
        s.burst_amplitude = m["burst_amplitude"];
        s.gyro_amplitude = m["gyro_amplitude"];
        s.burst_min_hz = m["burst_min_hz"];
        s.burst_max_hz = m["burst_max_hz"];
        s.phone_gain = m["phone_gain"];
        s.camera_noise = m["camera_noise"];
        s.accel_noise = m["accel_noise"];
        s.gyro_noise = m["gyro_noise"];
        s.timestamp_jitter_s = m["timestamp_jitter_s"];
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad sync scenario: ") + e.what());
    }
    s.validate();
    return s;
}

struct GestureTruth {
    Timestamp start{};  // reference time of motion onset
    double rise_s = 0, hold_s = 0, drop_s = 0, amplitude = 0;
    double duration_s() const { return rise_s + hold_s + drop_s; }
};

struct StreamTruth {
    std::string device_id;
    StreamRole role = StreamRole::camera;
    double rate_hz = 0;
    double offset_s = 0;  // local - reference at session start
    double drift = 0;     // local seconds gained per reference second

    /// Local clock reading at reference time `t`.
    Timestamp local_at(Timestamp t, Timestamp session_start) const {
        const double el = to_seconds(t - session_start);
        return t + from_seconds(offset_s + drift * el);
    }
};

struct SubjectSession {
    std::string subject_id;
    Timestamp session_start{};
    Timestamp session_end{};
    std::vector<StreamTruth> streams;
    std::vector<GestureTruth> gestures;
    std::vector<timebase::SampleStream> data;  // parallel to `streams`

    const StreamTruth& truth(StreamRole r) const {
        for (const auto& s : streams)
            if (s.role == r) return s;
        throw UsageError("session has no " + to_string(r) + " stream");
    }
    const timebase::SampleStream& stream(StreamRole r) const {
        for (std::size_t i = 0; i < streams.size(); ++i)
            if (streams[i].role == r) return data[i];
        throw UsageError("session has no " + to_string(r) + " stream");
    }
};

struct SyncScenario {
    SyncScenarioSpec spec;
    std::uint64_t seed = 0;
    std::vector<SubjectSession> sessions;
};

namespace detail {

inline double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

inline double gesture_height(const GestureTruth& g, double t) {
    if (t < 0.0) return 0.0;
    if (t < g.rise_s) return g.amplitude * smoothstep(t / g.rise_s);
    t -= g.rise_s;
    if (t < g.hold_s) return g.amplitude;
    t -= g.hold_s;
    if (t < g.drop_s) return g.amplitude * (1.0 - smoothstep(t / g.drop_s));
    return 0.0;
}

/// Second derivative of gesture_height: the vertical hand acceleration an
/// IMU on the moving arm reads.
inline double gesture_accel(const GestureTruth& g, double t) {
    if (t < 0.0) return 0.0;
    if (t < g.rise_s) return g.amplitude * 6.0 * (1.0 - 2.0 * t / g.rise_s) / (g.rise_s * g.rise_s);
    t -= g.rise_s + g.hold_s;
    if (t < 0.0) return 0.0;
    if (t < g.drop_s) return -g.amplitude * 6.0 * (1.0 - 2.0 * t / g.drop_s) / (g.drop_s * g.drop_s);
    return 0.0;
}

inline constexpr double kTremorRamp = 0.2;  // s

struct Burst {
    std::vector<std::array<double, 3>> parts;  // amplitude, freq, phase
    double eval(double t) const {
        double v = 0.0;
        for (const auto& [a, f, ph] : parts) v += a * std::sin(2.0 * std::numbers::pi * f * t + ph);
        return v;
    }
};

inline std::mt19937_64 rng_for(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{seed, a, b, std::uint64_t{0x5c3a}};
    return std::mt19937_64(seq);
}

inline Burst make_burst(std::mt19937_64& rng, double amplitude, double fmin, double fmax) {
    std::uniform_real_distribution<double> freq(fmin, fmax), phase(0.0, 2.0 * std::numbers::pi);
    Burst b;
    for (int k = 0; k < 3; ++k) b.parts.push_back({amplitude, freq(rng), phase(rng)});
    return b;
}

/// Uniform local ticks with bounded Gaussian jitter; `to_ref` maps a local
/// reading back to reference time.
template <class F>
std::vector<std::pair<Timestamp, Timestamp>> ticks(Timestamp local_begin, Timestamp local_end, double rate_hz,
                                                   double jitter_s, std::mt19937_64& rng, F to_ref) {
    std::normal_distribution<double> jit(0.0, 1.0);
    std::vector<std::pair<Timestamp, Timestamp>> out;
    const double period = 1.0 / rate_hz;
    for (std::int64_t k = 0;; ++k) {
        const Timestamp nominal = local_begin + from_seconds(period * static_cast<double>(k));
        if (!(nominal < local_end)) break;
        double j = jitter_s > 0.0 ? std::clamp(jit(rng), -3.0, 3.0) * jitter_s : 0.0;
        const Timestamp local = nominal + from_seconds(j);
        out.emplace_back(local, to_ref(local));
    }
    return out;
}

}  // namespace detail

/// Pure function of (spec, seed).
inline SyncScenario generate_sync_scenario(const SyncScenarioSpec& spec, std::uint64_t seed) {
    spec.validate();
    SyncScenario sc{spec, seed, {}};
    for (int s = 0; s < spec.subjects; ++s) {
        auto rng = detail::rng_for(seed, static_cast<std::uint64_t>(s), 0);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        SubjectSession ses;
        ses.subject_id = "s" + std::to_string(s + 1);
        ses.session_start = Timestamp::from_seconds(1000.0 * (s + 1));

        const double f_rise = 1.0 + spec.duration_jitter * (2.0 * U(rng) - 1.0);
        const double f_hold = 1.0 + spec.duration_jitter * (2.0 * U(rng) - 1.0);
        double t = spec.lead_in_s;
        for (int g = 0; g < spec.gestures_per_subject; ++g) {
            if (g > 0) t += spec.spacing_min_s + (spec.spacing_max_s - spec.spacing_min_s) * U(rng);
            GestureTruth gt;
            gt.start = ses.session_start + from_seconds(t);
            gt.rise_s = spec.rise_s * f_rise * (1.0 + 0.05 * (2.0 * U(rng) - 1.0));
            gt.hold_s = spec.hold_s * f_hold * (1.0 + 0.1 * (2.0 * U(rng) - 1.0));
            gt.drop_s = spec.drop_s * f_rise * (1.0 + 0.05 * (2.0 * U(rng) - 1.0));
            gt.amplitude = spec.amplitude * (1.0 + spec.amplitude_jitter * (2.0 * U(rng) - 1.0));
            ses.gestures.push_back(gt);
        }
        ses.session_end = ses.gestures.back().start + from_seconds(ses.gestures.back().duration_s() + spec.tail_s);
        const double rest_z = 0.9 + 0.2 * U(rng);

        const std::pair<StreamRole, double> roles[] = {
            {StreamRole::camera, spec.camera_rate_hz}, {StreamRole::phone, spec.phone_rate_hz}, {StreamRole::wrist, spec.wrist_rate_hz}};
        for (const auto& [role, rate] : roles) {
            StreamTruth st{ses.subject_id + "-" + to_string(role), role, rate, 0.0, 0.0};
            if (role != StreamRole::camera) {
                const double mag = spec.offset_min_s + (spec.offset_max_s - spec.offset_min_s) * U(rng);
                st.offset_s = U(rng) < 0.5 ? -mag : mag;
                st.drift = spec.max_drift * (2.0 * U(rng) - 1.0);
                if (auto it = spec.offset_override.find(to_string(role)); it != spec.offset_override.end())
                    st.offset_s = it->second;
            }
            ses.streams.push_back(st);
        }

        for (std::size_t k = 0; k < ses.streams.size(); ++k) {
            const auto& st = ses.streams[k];
            auto srng = detail::rng_for(seed, static_cast<std::uint64_t>(s), k + 1);
            std::normal_distribution<double> N(0.0, 1.0);
            const auto to_ref = [&](Timestamp local) {
                // Inverse of local_at: local = t + offset + drift (t - start).
                const double x = to_seconds(local - ses.session_start) - st.offset_s;
                return ses.session_start + from_seconds(x / (1.0 + st.drift));
            };
            const auto grid = detail::ticks(st.local_at(ses.session_start, ses.session_start),
                                            st.local_at(ses.session_end, ses.session_start), st.rate_hz,
                                            spec.timestamp_jitter_s, srng, to_ref);
            timebase::SampleStream out;
            out.descriptor = {st.device_id,
                              st.role == StreamRole::camera ? timebase::Modality::camera_series : timebase::Modality::imu,
                              st.rate_hz};
            const double gain = st.role == StreamRole::phone ? spec.phone_gain : 1.0;
            std::vector<std::array<detail::Burst, 2>> bursts;
            for (std::size_t g = 0; g < ses.gestures.size(); ++g)
                bursts.push_back({detail::make_burst(srng, gain * spec.burst_amplitude, spec.burst_min_hz, spec.burst_max_hz),
                                  detail::make_burst(srng, gain * spec.gyro_amplitude, spec.burst_min_hz, spec.burst_max_hz)});
            std::size_t gi = 0;
            for (const auto& [local, ref] : grid) {
                while (gi + 1 < ses.gestures.size() &&
                       ref >= ses.gestures[gi].start + from_seconds(ses.gestures[gi].duration_s()))
                    ++gi;
                const auto& g = ses.gestures[gi];
                const double rel = to_seconds(ref - g.start);
                const bool active = rel >= 0.0 && rel < g.duration_s();
                timebase::SensorSample smp;
                smp.device_id = st.device_id;
                smp.modality = out.descriptor.modality;
                smp.local_ts = local;
                if (st.role == StreamRole::camera) {
                    smp.payload = {rest_z + detail::gesture_height(g, rel) + spec.camera_noise * N(srng)};
                } else {
                    const double ramp = active ? std::min(1.0, rel / detail::kTremorRamp) : 0.0;
                    const double a = active ? gain * detail::gesture_accel(g, rel) + ramp * bursts[gi][0].eval(rel) : 0.0;
                    const double w = ramp * bursts[gi][1].eval(rel);
                    smp.payload = {spec.accel_noise * N(srng),
                                   spec.accel_noise * N(srng),
                                   9.81 + a + spec.accel_noise * N(srng),
                                   0.6 * w + spec.gyro_noise * N(srng),
                                   w + spec.gyro_noise * N(srng),
                                   spec.gyro_noise * N(srng)};
                }
                out.samples.push_back(std::move(smp));
            }
            ses.data.push_back(std::move(out));
        }
        sc.sessions.push_back(std::move(ses));
    }
    return sc;
}

/// Ground truth plus the recipe to regenerate the data.
inline ojson sync_manifest(const SyncScenario& sc) {
    ojson j = report_header("sync_scenario", sc.seed);
    j["spec"] = to_json(sc.spec);
    ojson subjects = ojson::array();
    for (const auto& s : sc.sessions) {
        ojson streams = ojson::array(), gestures = ojson::array();
        for (std::size_t k = 0; k < s.streams.size(); ++k) {
            const auto& st = s.streams[k];
            streams.push_back({{"device_id", st.device_id},
                               {"role", to_string(st.role)},
                               {"rate_hz", st.rate_hz},
                               {"offset_s", st.offset_s},
                               {"drift", st.drift},
                               {"samples", s.data[k].samples.size()}});
        }
        for (const auto& g : s.gestures)
            gestures.push_back({{"start_ns", g.start.ns},
                                {"rise_s", g.rise_s},
                                {"hold_s", g.hold_s},
                                {"drop_s", g.drop_s},
                                {"amplitude", g.amplitude}});
        subjects.push_back({{"subject_id", s.subject_id},
                            {"session_start_ns", s.session_start.ns},
                            {"session_end_ns", s.session_end.ns},
                            {"streams", streams},
                            {"gestures", gestures}});
    }
    j["subjects"] = subjects;
    return j;
}

inline std::string sync_samples_ndjson(const SyncScenario& sc) {
    std::ostringstream os;
    for (const auto& s : sc.sessions)
        for (const auto& st : s.data) timebase::write_samples(os, st.samples);
    return os.str();
}

/// Rebuilds a scenario from its manifest alone and checks the recorded truth.
inline SyncScenario sync_scenario_from_manifest(const ojson& m) {
    if (m.value("kind", "") != "sync_scenario") throw ConfigError("not a sync scenario manifest");
    const auto sc = generate_sync_scenario(sync_spec_from_json(m.at("spec")), m.at("seed").get<std::uint64_t>());
    const ojson again = sync_manifest(sc);
    if (again["subjects"] != m.at("subjects")) throw IntegrityError("manifest truth does not match its own generator");
    return sc;
}

}  // namespace sass::harness
