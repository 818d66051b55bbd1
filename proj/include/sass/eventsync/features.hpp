#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "sass/error.hpp"
#include "sass/eventsync/series.hpp"
#include "sass/eventsync/signal.hpp"

namespace sass::eventsync {

/// Moments of a channel group's vector magnitude, plus SMA over raw channels.
struct GroupFeatures {
    double mean = 0.0;
    double variance = 0.0;
    double std = 0.0;
    double sma = 0.0;
    double entropy = 0.0;
};

struct FeatureVector {
    GroupFeatures accelerometer;
    GroupFeatures gyroscope;
};

/// Which channels form each group in an IMU row; defaults match the
/// (ax, ay, az, gx, gy, gz) payload.
struct ImuChannels {
    std::vector<std::size_t> accelerometer{0, 1, 2};
    std::vector<std::size_t> gyroscope{3, 4, 5};
};

inline GroupFeatures group_features(const TimeSeries& s, std::size_t begin, std::size_t end,
                                    const std::vector<std::size_t>& channels) {
    GroupFeatures f;
    if (channels.empty()) return f;
    const std::size_t n = end - begin;
    std::vector<double> mag(n);
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (auto c : channels) {
            const double v = s.at(begin + i, c);
            sq += v * v;
            abs_sum += std::abs(v);
        }
        mag[i] = std::sqrt(sq);
    }
    // Two-pass moments: mean first, then centred squares.
    for (double m : mag) f.mean += m;
    f.mean /= static_cast<double>(n);
    for (double m : mag) f.variance += (m - f.mean) * (m - f.mean);
    f.variance /= static_cast<double>(n);
    f.std = std::sqrt(f.variance);
    f.sma = abs_sum / static_cast<double>(n);
    f.entropy = shannon_entropy(mag);
    return f;
}

/// Features of rows [begin, end) of an IMU series.
inline FeatureVector extract_imu_features(const TimeSeries& s, std::size_t begin, std::size_t end,
                                          const ImuChannels& channels = {}) {
    if (end <= begin || end > s.size()) throw UsageError("feature window must be non-empty");
    return {group_features(s, begin, end, channels.accelerometer), group_features(s, begin, end, channels.gyroscope)};
}

inline FeatureVector extract_imu_features(const TimeSeries& s, const ImuChannels& channels = {}) {
    return extract_imu_features(s, 0, s.size(), channels);
}

/// Named feature components that can feed the HMM observation vector.
enum class Feature { acc_mean, acc_std, acc_sma, acc_entropy, gyro_mean, gyro_std, gyro_sma, gyro_entropy };

inline double pick(const FeatureVector& f, Feature which) {
    switch (which) {
        case Feature::acc_mean: return f.accelerometer.mean;
        case Feature::acc_std: return f.accelerometer.std;
        case Feature::acc_sma: return f.accelerometer.sma;
        case Feature::acc_entropy: return f.accelerometer.entropy;
        case Feature::gyro_mean: return f.gyroscope.mean;
        case Feature::gyro_std: return f.gyroscope.std;
        case Feature::gyro_sma: return f.gyroscope.sma;
        case Feature::gyro_entropy: return f.gyroscope.entropy;
    }
    return 0.0;
}

struct FeatureWindowing {
    Duration window = milliseconds(500);
    Duration stride = milliseconds(250);
    ImuChannels channels;
    std::vector<Feature> observation{Feature::acc_std, Feature::acc_sma, Feature::gyro_std, Feature::gyro_sma};
};

struct FeatureSequence {
    std::vector<Timestamp> window_starts;
    std::vector<std::vector<double>> observations;
};

/// Windowed feature sequence over a whole IMU series.
inline FeatureSequence feature_sequence(const TimeSeries& imu, const FeatureWindowing& cfg = {}) {
    FeatureSequence out;
    if (imu.empty()) return out;
    std::size_t a = 0;
    for (Timestamp t = imu.timestamps.front(); t + cfg.window <= imu.timestamps.back(); t += cfg.stride) {
        while (a < imu.size() && imu.timestamps[a] < t) ++a;
        std::size_t b = a;
        while (b < imu.size() && imu.timestamps[b] < t + cfg.window) ++b;
        if (b == a) continue;
        const auto f = extract_imu_features(imu, a, b, cfg.channels);
        std::vector<double> obs;
        for (auto which : cfg.observation) obs.push_back(pick(f, which));
        out.window_starts.push_back(t);
        out.observations.push_back(std::move(obs));
    }
    return out;
}

}  // namespace sass::eventsync
