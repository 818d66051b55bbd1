// Runs every acceptance criterion at its stated tolerance. One PASS/FAIL line
// per criterion; exit status is nonzero if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sass/edgesched.hpp"
#include "sass/eventsync.hpp"
#include "sass/fusion.hpp"
#include "sass/harness.hpp"
#include "sass/services.hpp"
#include "sass/timebase.hpp"

using namespace sass;
namespace es = sass::eventsync;
namespace h = sass::harness;
namespace sv = sass::services;

namespace {

constexpr std::uint64_t kSeed = 42;

/// Collects sub-check failures; the criterion passes only if none failed.
struct Verdict {
    std::vector<std::string> notes, failures;
    void check(bool ok, const std::string& what) { (ok ? notes : failures).push_back(what); }
    void note(const std::string& what) { notes.push_back(what); }
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 and 2: synchronization ----

struct SyncRuns {
    h::SyncReport noisy, clean;
    double noisy_runtime_s = 0;
};

SyncRuns run_sync() {
    SyncRuns r;
    const auto t0 = std::chrono::steady_clock::now();
    r.noisy = h::run_sync_experiment(h::generate_sync_scenario({}, kSeed));
    r.noisy_runtime_s = seconds_since(t0);
    r.clean = h::run_sync_experiment(h::generate_sync_scenario(h::SyncScenarioSpec{}.noise_free(), kSeed));
    return r;
}

void criterion1(const SyncRuns& s, Verdict& v) {
    const auto& r = s.noisy;
    v.check(r.corrected_mae_s < 0.050, "MAE " + fmt(r.corrected_mae_s * 1e3) + " ms < 50 ms");
    v.check(r.reduction >= 0.85, "reduction " + fmt(r.reduction * 100) + "% >= 85% (raw " + fmt(r.raw_mae_s * 1e3) + " ms)");
    v.check(s.noisy_runtime_s < 60.0, "runtime " + fmt(s.noisy_runtime_s, 3) + " s < 60 s");
    v.check(s.clean.corrected_mae_s < 0.005, "noise-free MAE " + fmt(s.clean.corrected_mae_s * 1e3) + " ms < 5 ms");
}

void criterion2(const SyncRuns& s, Verdict& v) {
    for (const char* m : {"video", "imu"}) {
        const auto& d = s.noisy.detection.at(m);
        v.check(d.precision >= 0.9, std::string(m) + " precision " + fmt(d.precision) + " >= 0.9");
        v.check(d.recall >= 0.6, std::string(m) + " recall " + fmt(d.recall) + " >= 0.6");
    }
}

// ---- 3: oracle equivalences ----

double exhaustive_dtw(const std::vector<double>& s, const std::vector<double>& t) {
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
        acc += std::abs(s[i] - t[j]);
        if (i + 1 == s.size() && j + 1 == t.size()) {
            best = std::min(best, acc);
            return;
        }
        if (i + 1 < s.size()) walk(i + 1, j, acc);
        if (j + 1 < t.size()) walk(i, j + 1, acc);
        if (i + 1 < s.size() && j + 1 < t.size()) walk(i + 1, j + 1, acc);
    };
    walk(0, 0, 0.0);
    return best;
}

es::HmmModel random_hmm(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0), mu(-2.0, 2.0), var(0.2, 1.5);
    auto row = [&] {
        std::vector<double> r(n);
        double s = 0;
        for (auto& x : r) s += x = u(rng);
        for (auto& x : r) x /= s;
        return r;
    };
    es::HmmModel m;
    m.initial = row();
    for (std::size_t i = 0; i < n; ++i) {
        m.transition.push_back(row());
        std::vector<double> a(d), b(d);
        for (auto& x : a) x = mu(rng);
        for (auto& x : b) x = var(rng);
        m.means.push_back(a);
        m.variances.push_back(b);
    }
    return m;
}

es::ObservationSequence sample_hmm(const es::HmmModel& m, std::size_t T, std::mt19937_64& rng) {
    std::discrete_distribution<std::size_t> init(m.initial.begin(), m.initial.end());
    std::size_t s = init(rng);
    es::ObservationSequence out;
    for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) s = std::discrete_distribution<std::size_t>(m.transition[s].begin(), m.transition[s].end())(rng);
        es::Observation x;
        for (std::size_t k = 0; k < m.means[s].size(); ++k)
            x.push_back(std::normal_distribution<double>(m.means[s][k], std::sqrt(m.variances[s][k]))(rng));
        out.push_back(x);
    }
    return out;
}

// Joint log-probability of a state path, diagonal Gaussian emissions.
double joint_log_prob(const es::HmmModel& m, const es::ObservationSequence& obs, const std::vector<std::size_t>& path) {
    auto emit = [&](std::size_t s, const es::Observation& x) {
        double lp = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double e = x[k] - m.means[s][k];
            lp += -0.5 * std::log(2.0 * std::numbers::pi * m.variances[s][k]) - e * e / (2.0 * m.variances[s][k]);
        }
        return lp;
    };
    double lp = std::log(m.initial[path[0]]) + emit(path[0], obs[0]);
    for (std::size_t t = 1; t < obs.size(); ++t) lp += std::log(m.transition[path[t - 1]][path[t]]) + emit(path[t], obs[t]);
    return lp;
}

void criterion3(Verdict& v) {
    std::mt19937_64 rng(kSeed);
    {
        std::uniform_int_distribution<int> len(1, 6), val(-5, 5);
        int bad = 0;
        for (int trial = 0; trial < 500; ++trial) {
            std::vector<double> s(len(rng)), t(len(rng));
            for (auto& x : s) x = val(rng);
            for (auto& x : t) x = val(rng);
            if (es::dtw_abs(s, t).cost != exhaustive_dtw(s, t)) ++bad;
        }
        v.check(bad == 0, "DTW vs exhaustive paths: " + std::to_string(bad) + "/500 mismatches");
    }
    {
        int bad = 0;
        for (int trial = 0; trial < 60; ++trial) {
            const std::size_t N = 2 + trial % 2, T = 3 + trial % 6;  // up to 3 states, 8 steps
            const auto m = random_hmm(N, 2, rng);
            const auto obs = sample_hmm(m, T, rng);
            std::vector<std::size_t> path(T, 0), arg;
            double best = -std::numeric_limits<double>::infinity();
            std::function<void(std::size_t)> rec = [&](std::size_t t) {
                if (t == T) {
                    const double lp = joint_log_prob(m, obs, path);
                    if (lp > best) {
                        best = lp;
                        arg = path;
                    }
                    return;
                }
                for (std::size_t s = 0; s < N; ++s) {
                    path[t] = s;
                    rec(t + 1);
                }
            };
            rec(0);
            if (es::viterbi_decode(m, obs).path != arg) ++bad;
        }
        v.check(bad == 0, "Viterbi vs exhaustive argmax: " + std::to_string(bad) + "/60 mismatches");
    }
    {
        timebase::ClockNoise noise;
        noise.process_offset = 1e-30;
        noise.process_drift = 1e-40;
        noise.measurement = 2.5e-5;
        double worst = 0;
        std::normal_distribution<double> jitter(0.0, 0.005);
        for (int trial = 0; trial < 20; ++trial) {
            const Timestamp t0{2'000'000'000'000};
            std::vector<std::pair<Timestamp, Timestamp>> obs;
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const int n = 5 + trial * 4;
            for (int i = 0; i < n; ++i) {
                const Timestamp local = t0 + milliseconds(900 * i + 17 * (i % 3));
                const double x = to_seconds(local - t0);
                const Timestamp ref = local + from_seconds(-0.41 + 6e-5 * x + jitter(rng));
                obs.emplace_back(local, ref);
                const double y = to_seconds(ref - local);
                sx += x, sy += y, sxx += x * x, sxy += x * y;
            }
            const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx), icpt = (sy - slope * sx) / n;
            const auto m = timebase::fit_clock(obs, noise);
            const double offset0 = m.offset.count() - m.drift_rate * to_seconds(m.last_sync - t0);
            worst = std::max({worst, std::abs(offset0 / icpt - 1.0), std::abs(m.drift_rate / slope - 1.0)});
        }
        v.check(worst <= 1e-6, "Kalman vs least squares: worst relative gap " + fmt(worst, 3));
    }
    {
        double worst = 0;
        std::uniform_real_distribution<double> small(-0.2, 0.2), shift(-20, 20), persp(-1e-3, 1e-3), pt(0, 100);
        for (int trial = 0; trial < 50; ++trial) {
            fusion::Homography H;
            H << 1 + small(rng), small(rng), shift(rng), small(rng), 1 + small(rng), shift(rng), persp(rng), persp(rng), 1.0;
            std::vector<fusion::PointPair> pairs;
            while (pairs.size() < 8) {
                const Eigen::Vector3d s(pt(rng), pt(rng), 1.0), q = H * s;
                if (std::abs(q.z()) > 1e-6) pairs.push_back({{s.x(), s.y()}, {q.x() / q.z(), q.y() / q.z()}});
            }
            fusion::Homography F = fusion::fit_homography_dlt(pairs);
            F /= F(2, 2);
            worst = std::max(worst, (F - H).norm() / H.norm());
        }
        v.check(worst <= 1e-6, "DLT recovers known homographies: worst relative error " + fmt(worst, 3));
    }
    {
        const auto net = fusion::make_net({}, fusion::WeightInit::glorot, kSeed);
        Eigen::MatrixXd x(2, 16), y(2, 16);
        std::normal_distribution<double> g(0, 1);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng), y.data()[i] = g(rng);
        Eigen::VectorXd grad;
        fusion::loss_and_gradient(net, x, y, &grad);
        const Eigen::VectorXd theta = net.flatten();
        auto probe = net;
        double worst = 0;
        const double step = 1e-6;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd t = theta;
            t(i) = theta(i) + step;
            probe.unflatten(t);
            const double up = fusion::loss_and_gradient(probe, x, y, nullptr);
            t(i) = theta(i) - step;
            probe.unflatten(t);
            const double fd = (up - fusion::loss_and_gradient(probe, x, y, nullptr)) / (2 * step);
            worst = std::max(worst, std::abs(fd - grad(i)) / std::max({std::abs(fd), std::abs(grad(i)), 1e-6}));
        }
        v.check(worst <= 1e-4, "transform-net gradient vs central differences: worst relative gap " + fmt(worst, 3) +
                                   " over " + std::to_string(theta.size()) + " parameters");
    }
}

// ---- 4: fusion ----

void criterion4(Verdict& v) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = h::run_fusion_experiment(h::generate_fusion_scenario({}, kSeed));
    const double runtime = seconds_since(t0);
    for (const auto& [c, g] : r.gain) v.check(g >= 0.05, fusion::to_string(c) + " fused F1 gain " + fmt(g) + " >= 0.05");
    std::vector<fusion::SweepRow> ped;
    for (const auto& row : r.sweep)
        if (row.cls == fusion::ObjectClass::pedestrian) ped.push_back(row);
    std::sort(ped.begin(), ped.end(), [](const auto& a, const auto& b) { return a.threshold > b.threshold; });
    bool recall_rises = true;
    double min_precision = 1e9;
    for (std::size_t i = 0; i < ped.size(); ++i) {
        if (i > 0 && ped[i].scores.recall < ped[i - 1].scores.recall) recall_rises = false;
        min_precision = std::min(min_precision, ped[i].scores.precision);
    }
    v.check(recall_rises, "pedestrian recall non-decreasing as threshold -> 0 (" + fmt(ped.front().scores.recall) + " at " +
                              fmt(ped.front().threshold) + " m -> " + fmt(ped.back().scores.recall) + " at 0 m)");
    v.check(ped.back().scores.precision == min_precision && ped.back().scores.precision < ped.front().scores.precision,
            "pedestrian precision declines to its minimum at 0 m (" + fmt(ped.front().scores.precision) + " -> " +
                fmt(ped.back().scores.precision) + ")");
    v.check(runtime < 30.0, "runtime " + fmt(runtime, 3) + " s < 30 s");
}

// ---- 5: scheduler ----

void criterion5(Verdict& v) {
    const auto dur = std::chrono::seconds(120);
    edgesched::SchedulerConfig cfg;  // alpha 1, 1 ms cycle
    const auto dec = h::run_sched_experiment(h::workload_preset("calibrated"), h::topology_preset("calibrated"), cfg, kSeed, dur);
    const auto mono = h::run_sched_experiment(h::workload_preset("monolithic"), h::topology_preset("monolithic"), cfg, kSeed, dur);
    const double ratio = dec.metrics.throughput / mono.metrics.throughput;
    v.check(ratio >= 10.0, "throughput " + fmt(dec.metrics.throughput) + " vs " + fmt(mono.metrics.throughput) +
                               " tasks/s, ratio " + fmt(ratio) + " >= 10");

    const auto inv = h::run_sched_experiment(h::workload_preset("two_priority"), h::topology_preset("single_medium"), cfg, kSeed, dur);
    v.check(inv.metrics.inversion_rate <= 0.05, "priority inversion rate " + fmt(inv.metrics.inversion_rate) + " <= 0.05 over " +
                                                    std::to_string(inv.result.counters.medium_dispatches) + " medium dispatches");

    const double w_star = std::numbers::e - 1.0, cycle = to_seconds(cfg.cycle_period);
    std::optional<double> overtake;
    for (int k = 0; k < 100000 && !overtake; ++k) {
        const double now = k * cycle;
        std::vector<edgesched::Task> q{{1, "lo", edgesched::ComputeClass::light, 1.0, Timestamp{0}, milliseconds(5), std::nullopt},
                                       {2, "hi", edgesched::ComputeClass::light, 0.0, Timestamp::from_seconds(now), milliseconds(5), std::nullopt}};
        if (edgesched::schedule_cycle(q, 1, Timestamp::from_seconds(now), cfg).front().id == 1) overtake = now;
    }
    v.check(overtake && *overtake >= w_star - 1e-9 && *overtake <= w_star + cycle,
            "overtake at " + (overtake ? fmt(*overtake, 6) : std::string("never")) + " s, W* = e-1 = " + fmt(w_star, 6) + " s");

    double worst = 0;
    for (const auto* r : {&dec, &inv}) worst = std::max(worst, r->metrics.overhead_ms_per_cycle.value_or(1e9));
    v.check(worst < 1.0, "scheduling overhead " + fmt(worst, 3) + " ms/cycle < 1 ms (mean over cycles, worst run)");

    const auto again = h::run_sched_experiment(h::workload_preset("calibrated"), h::topology_preset("calibrated"), cfg, kSeed, dur);
    const auto inv2 = h::run_sched_experiment(h::workload_preset("two_priority"), h::topology_preset("single_medium"), cfg, kSeed, dur);
    v.check(again.result.event_log == dec.result.event_log && inv2.result.event_log == inv.result.event_log,
            "same seed gives byte-identical event logs (" + std::to_string(dec.result.event_log.size()) + " bytes)");
}

// ---- 6: services ----

const char* kRecord =
    R"({"device_id":"act-0","type":"actuator","location":{"latitude":40.0,"longitude":-70.0,"description":"Alpha St."},"capabilities":["switch"],"data_format":"JSON","access_methods":{"api_endpoint":"https://generic-endpoint.org/","protocols":"MQTT"},"status":"online","last_sync_timestamp":"2024-11-07T13:24:02.0923","registration_timestamp":"2024-08-05T11:19:31.5754","owner":"Testbed"})";

struct ServiceRig {
    sv::MemoryStorage store;
    sv::ManualClock clock{sv::parse_iso("2024-11-07T13:00:00.0000")};
    sv::IdGenerator ids;
    sv::Registry reg;
    std::string admin, app;
    explicit ServiceRig(std::uint64_t seed) : ids(seed), reg(store, clock, ids, options()) {
        admin = reg.issue("root", {sv::Role::admin}, std::chrono::hours(1));
        app = reg.issue("app", {sv::Role::app}, std::chrono::hours(1));
    }
    static sv::RegistryOptions options() {
        sv::RegistryOptions o;
        o.key = "acceptance-key";
        return o;
    }
    std::string add(const std::string& id, const h::ojson& config, const char* type = "actuator") {
        auto r = h::ojson::parse(kRecord);
        r["device_id"] = id;
        r["type"] = type;
        r["config"] = config;
        return reg.register_device(r, admin);
    }
};

void criterion6(Verdict& v) {
    {
        ServiceRig rig(1);
        rig.add("cam-1", {{"fps", 30}}, "sensor");
        const h::ojson cfg = h::ojson::parse(R"({"fps":15,"roi":{"x":1,"y":[2,3]},"gain":0.25,"label":"né"})");
        const auto snap = rig.reg.snapshot_config(rig.admin, "cam-1", cfg);
        const std::string before = rig.reg.config("cam-1").dump();
        rig.reg.snapshot_config(rig.admin, "cam-1", {{"fps", 60}});
        const bool mutated = rig.reg.config("cam-1").dump() != before;
        rig.reg.rollback(rig.admin, "cam-1", snap.version_id);
        v.check(mutated && rig.reg.config("cam-1").dump() == before, "register -> snapshot -> mutate -> rollback restores byte-equal config");
    }
    {
        ServiceRig rig(2);
        sv::FaultInjectingActuator act(1.0, 0.0, kSeed);
        rig.reg.set_actuator(&act);
        rig.add("act-1", {{"mode", "auto"}, {"level", 3}});
        int restored = 0, rounds = 0;
        std::mt19937_64 rng(kSeed);
        for (; rounds < 100; ++rounds) {
            const std::string pre = rig.reg.config("act-1").dump();
            const auto aid = rig.reg.enqueue_action(rig.app, "act-1", {{"set", {{"level", static_cast<int>(rng() % 100)}}}});
            while (rig.reg.pending_actions() > 0) rig.reg.process_actions();
            if (rig.reg.action(aid).state == sv::ActionState::rolled_back && rig.reg.config("act-1").dump() == pre) ++restored;
        }
        v.check(act.faults() == 100 && restored == 100,
                "auto-rollback restored the pre-action snapshot after " + std::to_string(restored) + "/" + std::to_string(act.faults()) + " injected faults");
    }
    {
        const Timestamp now = sv::parse_iso("2024-11-07T13:00:00.0000");
        const auto tok = sv::issue_token("camera-001", {sv::Role::device}, std::chrono::hours(1), "acceptance-key", now);
        std::mt19937_64 rng(kSeed);
        int accepted = 0;
        for (int i = 0; i < 1000; ++i) {
            std::string m = tok;
            const std::size_t pos = rng() % m.size();
            unsigned char b = static_cast<unsigned char>(rng() % 256);
            if (b == static_cast<unsigned char>(m[pos])) b ^= 0x01;
            m[pos] = static_cast<char>(b);
            try {
                sv::validate_token(m, "acceptance-key", now);
                ++accepted;
            } catch (const AuthError&) {
            }
        }
        v.check(accepted == 0, "token byte-flip fuzz: " + std::to_string(accepted) + "/1000 forgeries accepted");
    }
    {
        int matched = 0;
        for (int seq = 0; seq < 100; ++seq) {
            ServiceRig rig(100 + seq);
            sv::FaultInjectingActuator act(0.2, 0.2, seq);
            rig.reg.set_actuator(&act);
            std::mt19937_64 rng(seq);
            std::vector<std::string> devs;
            std::map<std::string, std::vector<std::string>> versions;
            for (int op = 0; op < 60; ++op) {
                const int kind = devs.empty() ? 0 : static_cast<int>(rng() % 6);
                if (kind == 0) {
                    const std::string id = "dev-" + std::to_string(devs.size());
                    rig.add(id, {{"seed", static_cast<int>(rng() % 1000)}});
                    devs.push_back(id);
                    versions[id].push_back(rig.reg.current_version(id));
                    continue;
                }
                const auto& d = devs[rng() % devs.size()];
                if (kind == 1) versions[d].push_back(rig.reg.snapshot_config(rig.admin, d, {{"v", static_cast<int>(rng() % 50)}}).version_id);
                else if (kind == 2) rig.reg.rollback(rig.admin, d, versions[d][rng() % versions[d].size()]);
                else if (kind == 3) rig.reg.enqueue_action(rig.app, d, {{"set", {{"q", static_cast<int>(rng() % 9)}}}});
                else if (kind == 4) rig.reg.process_actions();
                else rig.clock.advance(milliseconds(static_cast<std::int64_t>(rng() % 500)));
            }
            if (sv::replay(rig.store.read(sv::Registry::kLogStream)).to_json() == rig.reg.state_json()) ++matched;
        }
        v.check(matched == 100, "log replay reconstructs registry state in " + std::to_string(matched) + "/100 random sequences");
    }
}

// ---- 7: EM and DBA monotonicity ----

double squared_dtw(const std::vector<double>& a, const std::vector<double>& b) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> D(a.size() + 1, std::vector<double>(b.size() + 1, inf));
    D[0][0] = 0;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const double d = a[i - 1] - b[j - 1];
            D[i][j] = d * d + std::min({D[i - 1][j], D[i][j - 1], D[i - 1][j - 1]});
        }
    return D[a.size()][b.size()];
}

void criterion7(Verdict& v) {
    int hmm_bad = 0, dba_bad = 0;
    double worst_drop = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed + 1000);
        const auto gen = random_hmm(3, 2, rng);
        const auto r = es::train_hmm({sample_hmm(gen, 150, rng), sample_hmm(gen, 90, rng)}, 3, 20, seed);
        for (std::size_t k = 1; k < r.log_likelihood.size(); ++k) {
            worst_drop = std::max(worst_drop, r.log_likelihood[k - 1] - r.log_likelihood[k]);
            if (r.log_likelihood[k] < r.log_likelihood[k - 1] - 1e-8) ++hmm_bad;
        }
        if (r.log_likelihood.size() != 21) ++hmm_bad;
    }
    v.check(hmm_bad == 0, "Baum-Welch log-likelihood non-decreasing over 20 iterations x 10 seeds (largest drop " + fmt(worst_drop, 3) + ")");
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed + 2000);
        std::uniform_int_distribution<int> len(10, 40);
        std::normal_distribution<double> g(0, 1);
        std::vector<std::vector<double>> set(7);
        for (auto& s : set) {
            s.resize(len(rng));
            double walk = 0;
            for (auto& x : s) x = walk += g(rng);
        }
        const auto r = es::dba(set, 10);
        for (std::size_t k = 1; k < r.cost_history.size(); ++k)
            if (r.cost_history[k] > r.cost_history[k - 1] + 1e-9) ++dba_bad;
        double direct = 0;
        for (const auto& s : set) direct += squared_dtw(r.average, s);
        if (std::abs(direct - r.cost_history.back()) > 1e-9 * std::max(1.0, direct)) ++dba_bad;
    }
    v.check(dba_bad == 0, "DBA within-set squared DTW cost non-increasing per iteration on 10 random sets");
}

}  // namespace

int main() {
    int failed = 0;
    auto run = [&](int n, const std::string& name, const std::function<void(Verdict&)>& f) {
        Verdict v;
        try {
            f(v);
        } catch (const std::exception& e) {
            v.failures.push_back(std::string("exception: ") + e.what());
        }
        const bool ok = v.failures.empty();
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << " (" << name << ")";
        std::string sep = ": ";
        for (const auto& f : v.failures) std::cout << sep << "FAILED " << f, sep = "; ";
        for (const auto& f : v.notes) std::cout << sep << f, sep = "; ";
        std::cout << std::endl;
    };

    SyncRuns sync;
    std::string sync_error;
    try {
        sync = run_sync();
    } catch (const std::exception& e) {
        sync_error = e.what();
    }
    auto with_sync = [&](auto f) {
        return [&, f](Verdict& v) {
            if (!sync_error.empty()) throw std::runtime_error(sync_error);
            f(sync, v);
        };
    };
    run(1, "synchronization reduction", with_sync(criterion1));
    run(2, "event detection", with_sync(criterion2));
    run(3, "oracle equivalences", criterion3);
    run(4, "fusion gain", criterion4);
    run(5, "scheduler", criterion5);
    run(6, "services round-trips", criterion6);
    run(7, "EM and DBA monotonicity", criterion7);
    return failed == 0 ? 0 : 1;
}
