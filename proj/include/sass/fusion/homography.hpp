#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sass/error.hpp"
#include "sass/fusion/types.hpp"

namespace sass::fusion {

using Homography = Eigen::Matrix3d;

inline constexpr double kMinHomographyDet = 1e-12;
inline constexpr double kMinProjectiveW = 1e-9;

/// Maps (x, y, 1) through H; false when the point lands near the line at infinity.
inline bool apply_homography(const Homography& H, const Point2& p, Point2& out) {
    const Eigen::Vector3d v = H * Eigen::Vector3d(p.x, p.y, 1.0);
    if (std::abs(v.z()) < kMinProjectiveW) return false;
    out = {v.x() / v.z(), v.y() / v.z()};
    return true;
}

namespace detail {

// Similarity taking the points to zero centroid and mean radius sqrt(2).
inline Eigen::Matrix3d normalizer(std::span<const Point2> pts) {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    double r = 0.0;
    for (const auto& p : pts) r += std::hypot(p.x - cx, p.y - cy);
    r /= static_cast<double>(pts.size());
    const double s = r > 0.0 ? std::sqrt(2.0) / r : 1.0;
    Eigen::Matrix3d T;
    T << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return T;
}

inline bool collinear(const Point2& a, const Point2& b, const Point2& c, double scale) {
    const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return std::abs(cross) <= 1e-10 * scale * scale;
}

inline void check_configuration(std::span<const PointPair> pairs) {
    if (pairs.size() < 4) throw FitError("homography needs at least 4 point pairs");
    double scale = 0.0;
    for (const auto& p : pairs) scale = std::max({scale, std::abs(p.source.x), std::abs(p.source.y)});
    scale = std::max(scale, 1.0);
    if (pairs.size() == 4) {
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i + 1; j < 4; ++j)
                for (std::size_t k = j + 1; k < 4; ++k)
                    if (collinear(pairs[i].source, pairs[j].source, pairs[k].source, scale))
                        throw FitError("three source points are collinear");
        return;
    }
    for (std::size_t k = 2; k < pairs.size(); ++k)
        if (!collinear(pairs[0].source, pairs[1].source, pairs[k].source, scale)) return;
    throw FitError("all source points are collinear");
}

}  // namespace detail

/// Normalised direct linear transform; the result has H(2,2) = 1.
inline Homography fit_homography_dlt(std::span<const PointPair> pairs) {
    detail::check_configuration(pairs);
    std::vector<Point2> src, dst;
    for (const auto& p : pairs) {
        src.push_back(p.source);
        dst.push_back(p.target);
    }
    const Eigen::Matrix3d Ts = detail::normalizer(src), Td = detail::normalizer(dst);
    Eigen::MatrixXd A(2 * pairs.size(), 9);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Eigen::Vector3d s = Ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
        const Eigen::Vector3d d = Td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
        const double x = s.x() / s.z(), y = s.y() / s.z(), u = d.x() / d.z(), v = d.y() / d.z();
        A.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        A.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv.size() >= 8 && sv(7) <= 1e-12 * sv(0))
        throw FitError("degenerate configuration: correspondences do not fix a unique homography");
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d Hn;
    Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    Homography H = Td.inverse() * Hn * Ts;
    if (std::abs(H(2, 2)) < 1e-15) throw FitError("homography maps the source origin to infinity");
    H /= H(2, 2);
    if (std::abs(H.determinant()) <= kMinHomographyDet) throw FitError("fitted homography is singular");
    return H;
}

/// Forward transfer error in target units; infinite when the point is not mappable.
inline double transfer_error(const Homography& H, const PointPair& p) {
    Point2 q;
    if (!apply_homography(H, p.source, q)) return std::numeric_limits<double>::infinity();
    return distance(q, p.target);
}

struct RansacResult {
    Homography H = Homography::Identity();
    std::vector<bool> inliers;
    std::size_t inlier_count = 0;
};

inline RansacResult ransac_fit(std::span<const PointPair> pairs, double inlier_threshold, std::size_t max_iterations,
                               std::uint64_t seed) {
    if (pairs.size() < 4) throw FitError("RANSAC needs at least 4 point pairs");
    if (!(inlier_threshold > 0.0)) throw ConfigError("inlier threshold must be positive");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(pairs.size());
    std::iota(idx.begin(), idx.end(), 0);

    auto consensus = [&](const Homography& H, std::vector<bool>& mask, double& err) {
        std::size_t n = 0;
        err = 0.0;
        mask.assign(pairs.size(), false);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double e = transfer_error(H, pairs[i]);
            if (e < inlier_threshold) {
                mask[i] = true;
                err += e;
                ++n;
            }
        }
        return n;
    };

    std::size_t best_n = 0;
    double best_err = 0.0;
    std::vector<bool> best_mask, mask;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        // Partial Fisher-Yates draw of 4 distinct indices.
        for (std::size_t k = 0; k < 4; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
            std::swap(idx[k], idx[pick(rng)]);
        }
        const PointPair sample[4] = {pairs[idx[0]], pairs[idx[1]], pairs[idx[2]], pairs[idx[3]]};
        Homography H;
        try {
            H = fit_homography_dlt(sample);
        } catch (const FitError&) {
            continue;
        }
        double err = 0.0;
        const std::size_t n = consensus(H, mask, err);
        if (n > best_n || (n == best_n && n > 0 && err < best_err)) {
            best_n = n;
            best_err = err;
            best_mask = mask;
        }
    }
    if (best_n < 4) throw FitError("no model reached 4 inliers");

    // Refit on the consensus set until it stops changing.
    RansacResult r;
    r.inliers = best_mask;
    for (int round = 0; round < 10; ++round) {
        std::vector<PointPair> in;
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (r.inliers[i]) in.push_back(pairs[i]);
        r.H = fit_homography_dlt(in);
        double err = 0.0;
        const std::size_t n = consensus(r.H, mask, err);
        if (mask == r.inliers || n < 4) break;
        r.inliers = mask;
    }
    r.inlier_count = static_cast<std::size_t>(std::count(r.inliers.begin(), r.inliers.end(), true));
    return r;
}

}  // namespace sass::fusion
