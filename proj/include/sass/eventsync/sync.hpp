#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "sass/error.hpp"
#include "sass/scores.hpp"
#include "sass/eventsync/events.hpp"
#include "sass/eventsync/series.hpp"
#include "sass/eventsync/signal.hpp"
#include "sass/timebase/sample.hpp"

namespace sass::eventsync {

struct EventMatch {
    std::size_t a = 0;
    std::size_t b = 0;
    Duration delta{0};  // b.start - a.start
};

/// Greedy nearest-start matching: candidate pairs within `tolerance` are taken
/// in order of increasing |delta|; each event is used at most once.
inline std::vector<EventMatch> coarse_align(const std::vector<EventDetection>& a, const std::vector<EventDetection>& b,
                                            Duration tolerance = milliseconds(500), Duration shift_b = Duration{0}) {
    std::vector<std::tuple<std::int64_t, std::size_t, std::size_t>> cand;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const Duration d = (b[j].start + shift_b) - a[i].start;
            if (std::llabs(d.count()) <= tolerance.count()) cand.emplace_back(std::llabs(d.count()), i, j);
        }
    }
    std::sort(cand.begin(), cand.end());
    std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
    std::vector<EventMatch> out;
    for (auto [dist, i, j] : cand) {
        if (used_a[i] || used_b[j]) continue;
        used_a[i] = used_b[j] = true;
        out.push_back({i, j, b[j].start - a[i].start});
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    return out;
}

/// Bulk lag of `b` relative to `a`: the candidate start difference (within
/// ±search) that lets the most events match at `tolerance`. Ties prefer the
/// smaller summed residual. Lets the coarse stage absorb clock errors larger
/// than its own tolerance.
inline Duration estimate_bulk_lag(const std::vector<EventDetection>& a, const std::vector<EventDetection>& b,
                                  Duration tolerance, Duration search) {
    Duration best{0};
    std::size_t best_count = coarse_align(a, b, tolerance).size();
    double best_residual = std::numeric_limits<double>::infinity();
    auto residual = [&](const std::vector<EventMatch>& m, Duration lag) {
        double r = 0.0;
        for (const auto& x : m) r += std::abs(to_seconds(x.delta - lag));
        return r;
    };
    best_residual = residual(coarse_align(a, b, tolerance), best);
    for (const auto& ea : a) {
        for (const auto& eb : b) {
            const Duration d = eb.start - ea.start;
            if (std::llabs(d.count()) > search.count()) continue;
            const auto m = coarse_align(a, b, tolerance, -d);
            const double r = residual(m, d);
            if (m.size() > best_count || (m.size() == best_count && r < best_residual)) {
                best = d;
                best_count = m.size();
                best_residual = r;
            }
        }
    }
    return best;
}

struct FineTuneConfig {
    int filter_order = 4;
    double cutoff_hz = 5.0;
    Duration entropy_window = milliseconds(300);
    Duration search_window = std::chrono::seconds(4);  // detection window; search spans ±half of it
    double baseline_fraction = 0.25;
    double k_sigma = 2.0;
    double min_rise_bits = 0.25;
    std::size_t entropy_bins = kEntropyBins;
    double rest_bin_sigmas = 12.0;  // bin width floor in baseline signal std, keeps rest noise in one bin
    double upsample_hz = 0.0;  // entropy grid resolution; 0 keeps the native rate
};

struct FineTuneResult {
    Timestamp refined{};
    bool fallback = false;  // no entropy rise found; refined == coarse start
};

/// Refines the onset of one event in a single-channel signal: low-pass, sliding
/// entropy, peak, then the earliest post-baseline point before the peak where
/// entropy exceeds baseline mean + k·std. The onset is attributed to the newest
/// sample of that entropy window.
inline FineTuneResult fine_tune_onset(const TimeSeries& signal, Timestamp coarse_start, const FineTuneConfig& cfg = {}) {
    const Duration half = cfg.search_window / 2;
    const TimeSeries region = signal.slice(coarse_start - half, coarse_start + half);
    if (region.size() < 8) return {coarse_start, true};
    const double fs = nominal_rate(region);
    const double cutoff = std::min(cfg.cutoff_hz, 0.45 * fs);
    TimeSeries filtered = butterworth_lowpass(region, cfg.filter_order, cutoff);
    double rate = fs;
    if (cfg.upsample_hz > fs) {
        filtered = resample_linear(filtered, cfg.upsample_hz);
        rate = cfg.upsample_hz;
    }
    const Timestamp baseline_end = region.timestamps.front() + from_seconds(cfg.baseline_fraction * to_seconds(cfg.search_window));
    std::vector<double> rest;
    for (std::size_t i = 0; i < filtered.size() && filtered.timestamps[i] < baseline_end; ++i) rest.push_back(filtered.values[i]);
    if (rest.size() < 2) return {coarse_start, true};
    double rest_mean = 0.0, rest_var = 0.0;
    for (double v : rest) rest_mean += v;
    rest_mean /= static_cast<double>(rest.size());
    for (double v : rest) rest_var += (v - rest_mean) * (v - rest_mean);
    const double rest_sd = std::sqrt(rest_var / static_cast<double>(rest.size() - 1));
    std::nth_element(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(rest.size() / 2), rest.end());
    const Duration stride{static_cast<std::int64_t>(std::llround(1e9 / rate))};
    const TimeSeries ent =
        sliding_entropy(filtered, cfg.entropy_window, stride, rest[rest.size() / 2], cfg.rest_bin_sigmas * rest_sd, cfg.entropy_bins);
    if (ent.size() < 4) return {coarse_start, true};

    std::vector<double> base;
    std::size_t first_after = ent.size();
    for (std::size_t i = 0; i < ent.size(); ++i) {
        if (ent.timestamps[i] < baseline_end) {
            base.push_back(ent.values[i]);
        } else if (first_after == ent.size()) {
            first_after = i;
        }
    }
    if (base.size() < 2 || first_after == ent.size()) return {coarse_start, true};
    double mean = 0.0, var = 0.0;
    for (double v : base) mean += v;
    mean /= static_cast<double>(base.size());
    for (double v : base) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(base.size() - 1));
    const double threshold = mean + std::max(cfg.k_sigma * sd, cfg.min_rise_bits);

    std::size_t peak = first_after;
    for (std::size_t i = first_after; i < ent.size(); ++i)
        if (ent.values[i] > ent.values[peak]) peak = i;
    if (!(ent.values[peak] > threshold)) return {coarse_start, true};
    std::size_t onset = peak;
    for (std::size_t i = first_after; i <= peak; ++i) {
        if (ent.values[i] > threshold) {
            onset = i;
            break;
        }
    }
    Timestamp refined = ent.timestamps[onset] + cfg.entropy_window / 2;
    refined = std::clamp(refined, coarse_start - cfg.search_window, coarse_start + cfg.search_window);
    return {refined, false};
}

/// Refines one coarse match across streams. `coarse_pair` maps stream id to the
/// coarse event start in that stream's timeline.
inline std::map<std::string, FineTuneResult> fine_tune_event(const std::map<std::string, TimeSeries>& series_per_stream,
                                                             const std::map<std::string, Timestamp>& coarse_pair,
                                                             const FineTuneConfig& cfg = {}) {
    std::map<std::string, FineTuneResult> out;
    for (const auto& [id, start] : coarse_pair) {
        const auto it = series_per_stream.find(id);
        if (it == series_per_stream.end()) throw UsageError("no series for stream " + id);
        out[id] = fine_tune_onset(it->second, start, cfg);
    }
    return out;
}

/// Shifts each non-reference stream by (reference refined start - its refined start).
inline void apply_sync(std::vector<timebase::SampleStream>& streams, const std::map<std::string, Timestamp>& refined,
                       const std::string& reference_id) {
    const auto ref = refined.find(reference_id);
    if (ref == refined.end()) throw UsageError("reference stream missing from refined starts: " + reference_id);
    for (auto& st : streams) {
        const auto it = refined.find(st.descriptor.device_id);
        if (it == refined.end() || st.descriptor.device_id == reference_id) continue;
        const Duration shift = ref->second - it->second;
        for (auto& s : st.samples) s.corrected_ts = s.effective_ts() + shift;
    }
}

struct SyncErrors {
    double mae = 0.0;
    double rmse = 0.0;
    double mto = 0.0;  // mean signed offset, predicted - truth
};

/// Seconds-valued error summary between paired event times.
inline SyncErrors eval_sync(const std::vector<double>& truth, const std::vector<double>& predicted) {
    if (truth.empty()) throw UsageError("eval_sync needs at least one pair");
    if (truth.size() != predicted.size()) throw UsageError("eval_sync lists differ in length");
    SyncErrors e;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = predicted[i] - truth[i];
        e.mae += std::abs(d);
        e.rmse += d * d;
        e.mto += d;
    }
    const double n = static_cast<double>(truth.size());
    e.mae /= n;
    e.rmse = std::sqrt(e.rmse / n);
    e.mto /= n;
    return e;
}

/// One-to-one start-time matching within tolerance. Events here are all of
/// the gesture class, so the result carries a single "gesture" entry.
inline std::map<std::string, DetectionScores> eval_detection(const std::vector<EventDetection>& predicted,
                                                             const std::vector<EventDetection>& truth,
                                                             Duration tolerance) {
    if (tolerance <= Duration::zero()) throw ConfigError("detection tolerance must be positive");
    const auto matches = coarse_align(truth, predicted, tolerance);
    return {{"gesture", make_scores(matches.size(), predicted.size(), truth.size())}};
}

}  // namespace sass::eventsync
