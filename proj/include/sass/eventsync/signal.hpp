#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "sass/error.hpp"
#include "sass/eventsync/series.hpp"

namespace sass::eventsync {

inline constexpr std::size_t kEntropyBins = 16;

/// Shannon entropy (bits) of a histogram over [lo, hi] with `bins` equal bins.
/// Empty bins contribute nothing; a degenerate range puts everything in one bin.
inline double shannon_entropy(std::span<const double> values, double lo, double hi,
                              std::size_t bins = kEntropyBins) {
    if (values.empty()) return 0.0;
    std::vector<std::size_t> counts(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        std::size_t b = 0;
        if (width > 0.0) {
            const double pos = (v - lo) / width;
            b = pos <= 0.0 ? 0 : std::min<std::size_t>(bins - 1, static_cast<std::size_t>(pos));
        }
        ++counts[b];
    }
    double h = 0.0;
    const double n = static_cast<double>(values.size());
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

/// Histogram range taken from the values themselves.
inline double shannon_entropy(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return shannon_entropy(values, *lo, *hi);
}

/// Entropy over bins of fixed `width` with `center` in the middle of one bin.
inline double anchored_entropy(std::span<const double> values, double center, double width) {
    if (values.empty() || !(width > 0.0)) return 0.0;
    std::map<long long, std::size_t> counts;
    for (double v : values) ++counts[static_cast<long long>(std::floor((v - center) / width + 0.5))];
    double h = 0.0;
    const double n = static_cast<double>(values.size());
    for (const auto& [bin, c] : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

// ---- Butterworth low-pass ----

/// Second-order section in transposed direct form II: b0 b1 b2 / 1 a1 a2.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

/// Digital Butterworth low-pass as cascaded sections (bilinear transform with
/// prewarping). Each section is normalised to unit DC gain.
inline std::vector<Biquad> butterworth_design(int order, double cutoff_hz, double sample_rate_hz) {
    if (order < 1) throw ConfigError("filter order must be at least 1");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0))
        throw ConfigError("cutoff must lie strictly between 0 and Nyquist");
    const double fs2 = 2.0 * sample_rate_hz;
    const double wc = fs2 * std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
    std::vector<Biquad> sections;
    for (int k = 0; k < order / 2; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
        const std::complex<double> p = wc * std::polar(1.0, theta);
        const std::complex<double> z = (fs2 + p) / (fs2 - p);
        Biquad s;
        s.a1 = -2.0 * z.real();
        s.a2 = std::norm(z);
        const double g = (1.0 + s.a1 + s.a2) / 4.0;
        s.b0 = g;
        s.b1 = 2.0 * g;
        s.b2 = g;
        sections.push_back(s);
    }
    if (order % 2 == 1) {
        const double z = (fs2 - wc) / (fs2 + wc);
        Biquad s;
        s.a1 = -z;
        const double g = (1.0 + s.a1) / 2.0;
        s.b0 = g;
        s.b1 = g;
        sections.push_back(s);
    }
    return sections;
}

/// Single causal pass. Section states start at the steady state for x[0].
inline std::vector<double> filter_once(const std::vector<Biquad>& sections, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    if (y.empty()) return y;
    for (const auto& s : sections) {
        const double c = y.front();
        double z2 = (s.b2 - s.a2) * c;
        double z1 = (s.b1 - s.a1) * c + z2;
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

/// Zero-phase (forward-backward) filtering with odd reflection padding.
inline std::vector<double> filtfilt(const std::vector<Biquad>& sections, std::span<const double> x,
                                    std::size_t padlen) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    padlen = std::min(padlen, n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
    auto fwd = filter_once(sections, ext);
    std::reverse(fwd.begin(), fwd.end());
    auto back = filter_once(sections, fwd);
    std::reverse(back.begin(), back.end());
    return {back.begin() + static_cast<std::ptrdiff_t>(padlen),
            back.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

inline double nominal_rate(const TimeSeries& s) {
    if (s.size() < 2) throw UsageError("series needs at least two samples to infer its rate");
    return static_cast<double>(s.size() - 1) / to_seconds(s.timestamps.back() - s.timestamps.front());
}

/// Zero-phase Butterworth low-pass applied per channel. DC gain is exactly 1.
inline TimeSeries butterworth_lowpass(const TimeSeries& series, int order, double cutoff_hz) {
    const double fs = nominal_rate(series);
    const auto sections = butterworth_design(order, cutoff_hz, fs);
    const auto padlen = static_cast<std::size_t>(std::max(3.0 * (order + 1), 2.0 * fs / cutoff_hz));
    TimeSeries out = series;
    for (std::size_t c = 0; c < series.channels; ++c) {
        const auto ch = series.channel(c);
        const auto f = filtfilt(sections, ch.values, padlen);
        for (std::size_t i = 0; i < f.size(); ++i) out.values[i * series.channels + c] = f[i];
    }
    return out;
}

/// Entropy of each `window`-long frame at `stride`, timestamped at the frame
/// centre. Bin width is the series range over `bins`, so quiet segments
/// score low and motion raises the score. The grid is centred on `anchor`
/// (default: the series median) so rest-level noise cannot straddle an edge;
/// `min_width` floors the bin width.
inline TimeSeries sliding_entropy(const TimeSeries& series, Duration window, Duration stride,
                                  std::optional<double> anchor = std::nullopt, double min_width = 0.0,
                                  std::size_t bins = kEntropyBins) {
    if (series.channels != 1) throw UsageError("sliding_entropy expects one channel");
    if (stride <= Duration::zero()) throw ConfigError("stride must be positive");
    TimeSeries out;
    if (series.empty()) return out;
    const auto [lo, hi] = std::minmax_element(series.values.begin(), series.values.end());
    if (bins == 0) throw ConfigError("entropy needs at least one bin");
    const double width = std::max((*hi - *lo) / static_cast<double>(bins), min_width);
    double center = 0.0;
    if (anchor) {
        center = *anchor;
    } else {
        std::vector<double> sorted = series.values;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
        center = sorted[sorted.size() / 2];
    }
    std::vector<long long> bin(series.size(), 0);
    if (width > 0.0)
        for (std::size_t i = 0; i < series.size(); ++i)
            bin[i] = static_cast<long long>(std::floor((series.values[i] - center) / width + 0.5));
    std::map<long long, std::size_t> counts;
    std::size_t a = 0, b = 0;
    for (Timestamp t = series.timestamps.front(); t + window <= series.timestamps.back() + Duration{1}; t += stride) {
        while (b < series.size() && series.timestamps[b] < t + window) ++counts[bin[b++]];
        while (a < b && series.timestamps[a] < t) {
            auto it = counts.find(bin[a++]);
            if (--it->second == 0) counts.erase(it);
        }
        const std::size_t n = b - a;
        if (n < 3) throw UsageError("entropy window must cover at least 3 samples");
        double h = 0.0;
        for (const auto& [k, c] : counts) {
            const double p = static_cast<double>(c) / static_cast<double>(n);
            h -= p * std::log2(p);
        }
        out.push_back(t + window / 2, h);
    }
    return out;
}

/// Linear interpolation of a single-channel series onto a uniform grid.
inline TimeSeries resample_linear(const TimeSeries& series, double rate_hz) {
    if (series.channels != 1) throw UsageError("resample_linear expects one channel");
    if (!(rate_hz > 0.0)) throw ConfigError("resample rate must be positive");
    TimeSeries out;
    if (series.size() < 2) return series;
    const Duration step{static_cast<std::int64_t>(std::llround(1e9 / rate_hz))};
    std::size_t j = 0;
    for (Timestamp t = series.timestamps.front(); t <= series.timestamps.back(); t += step) {
        while (j + 2 < series.size() && series.timestamps[j + 1] <= t) ++j;
        const double t0 = to_seconds(series.timestamps[j] - series.timestamps.front());
        const double t1 = to_seconds(series.timestamps[j + 1] - series.timestamps.front());
        const double u = std::clamp((to_seconds(t - series.timestamps.front()) - t0) / (t1 - t0), 0.0, 1.0);
        out.push_back(t, series.values[j] + u * (series.values[j + 1] - series.values[j]));
    }
    return out;
}

}  // namespace sass::eventsync
