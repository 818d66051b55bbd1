#pragma once

#include <cmath>

#include <Eigen/Core>

#include "sass/error.hpp"
#include "sass/time.hpp"

namespace sass::timebase {

/// Per-device clock correction. `offset` is the correction at `last_sync`;
/// `drift_rate` is seconds of correction per second of local time.
struct ClockModel {
    std::chrono::duration<double> offset{0.0};
    double drift_rate = 0.0;
    Timestamp last_sync{};
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();

    /// Correction (seconds) that applies at local time `t`.
    double correction_at(Timestamp t) const {
        return offset.count() + drift_rate * to_seconds(t - last_sync);
    }
};

struct ClockNoise {
    double process_offset = 1e-6;    // s^2 per step
    double process_drift = 1e-12;    // (s/s)^2 per step
    double measurement = 1e-4;       // s^2
};

/// Diffuse prior used by a fresh filter. Large enough that the prior's pull on
/// the estimate is negligible after two observations.
struct ClockPrior {
    double offset_variance = 1e6;
    double drift_variance = 1e2;
};

inline constexpr double kMaxDriftRate = 0.1;

inline ClockModel identity_clock(Timestamp anchor = Timestamp{0}) {
    ClockModel m;
    m.last_sync = anchor;
    return m;
}

inline ClockModel fresh_clock(Timestamp anchor, const ClockPrior& prior = {}) {
    ClockModel m = identity_clock(anchor);
    m.covariance << prior.offset_variance, 0.0, 0.0, prior.drift_variance;
    return m;
}

/// T_corrected = T_local + offset + drift * (T_local - last_sync), rounded to ns.
inline Timestamp correct_timestamp(Timestamp local, const ClockModel& model) {
    if (local < model.last_sync) throw DomainError("sample precedes sync anchor");
    const double elapsed = static_cast<double>((local - model.last_sync).count());
    const double correction_ns = model.offset.count() * 1e9 + model.drift_rate * elapsed;
    return local + Duration{static_cast<std::int64_t>(std::llround(correction_ns))};
}

/// Model mapping corrected time back to local time.
inline ClockModel inverse(const ClockModel& model) {
    ClockModel inv;
    inv.last_sync = model.last_sync + Duration{static_cast<std::int64_t>(std::llround(model.offset.count() * 1e9))};
    const double anchor_residual = model.offset.count() - to_seconds(inv.last_sync - model.last_sync);
    inv.drift_rate = -model.drift_rate / (1.0 + model.drift_rate);
    inv.offset = std::chrono::duration<double>(-model.offset.count() - inv.drift_rate * anchor_residual);
    inv.covariance = model.covariance;
    return inv;
}

/// One predict/update step of the 2-state (offset, drift) filter. The state is
/// re-anchored at the observation's local time, so the returned model's
/// `offset` is the correction at `local`.
inline ClockModel kalman_update(const ClockModel& model, Timestamp local, Timestamp reference,
                                const ClockNoise& noise = {}) {
    if (!(noise.process_offset > 0.0) || !(noise.process_drift > 0.0) || !(noise.measurement > 0.0))
        throw ConfigError("clock noise variances must be positive");

    const double dt = to_seconds(local - model.last_sync);
    Eigen::Matrix2d F;
    F << 1.0, dt, 0.0, 1.0;
    Eigen::Vector2d x(model.offset.count(), model.drift_rate);
    x = F * x;
    Eigen::Matrix2d P = F * model.covariance * F.transpose();
    P(0, 0) += noise.process_offset;
    P(1, 1) += noise.process_drift;

    // H = [1 0]: at the new anchor the predicted correction is the offset itself.
    const double z = static_cast<double>((reference - local).count()) * 1e-9;
    const double innovation = z - x(0);
    const double s = P(0, 0) + noise.measurement;
    const Eigen::Vector2d K = P.col(0) / s;
    x += K * innovation;

    // Joseph form keeps P symmetric PSD.
    Eigen::Matrix2d IKH = Eigen::Matrix2d::Identity();
    IKH(0, 0) -= K(0);
    IKH(1, 0) -= K(1);
    Eigen::Matrix2d Pn = IKH * P * IKH.transpose() + noise.measurement * K * K.transpose();
    Pn = 0.5 * (Pn + Pn.transpose());

    ClockModel out;
    out.offset = std::chrono::duration<double>(x(0));
    out.drift_rate = x(1);
    out.last_sync = local;
    out.covariance = Pn;
    return out;
}

/// Fits a model to (local, reference) observation pairs by sequential updates,
/// starting from a diffuse prior anchored at the first observation.
template <class Range>
ClockModel fit_clock(const Range& observations, const ClockNoise& noise = {}, const ClockPrior& prior = {}) {
    auto it = std::begin(observations);
    if (it == std::end(observations)) throw UsageError("fit_clock needs at least one observation");
    ClockModel m = fresh_clock(it->first, prior);
    for (; it != std::end(observations); ++it) m = kalman_update(m, it->first, it->second, noise);
    if (std::abs(m.drift_rate) >= kMaxDriftRate) throw FitError("clock fit produced absurd drift rate");
    return m;
}

}  // namespace sass::timebase
