#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "sass/error.hpp"
#include "sass/eventsync/series.hpp"

namespace sass::eventsync {

/// Index pairs (i, j), 0-based, from (0, 0) to (|S|-1, |T|-1).
using WarpPath = std::vector<std::pair<std::size_t, std::size_t>>;

struct DtwResult {
    double cost = 0.0;
    WarpPath path;
};

using PointMetric = std::function<double(std::span<const double>, std::span<const double>)>;

inline double absolute_distance(std::span<const double> a, std::span<const double> b) { return std::abs(a[0] - b[0]); }

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

namespace detail {

// Cumulative-cost DTW over an n x m grid with steps (1,0), (0,1), (1,1).
// Ties prefer the diagonal, then the step in S, then the step in T.
template <class Cost>
DtwResult dtw_grid(std::size_t n, std::size_t m, Cost&& cost, bool want_path) {
    if (n == 0 || m == 0) throw UsageError("DTW inputs must be non-empty");
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> D((n + 1) * (m + 1), inf);
    auto idx = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
    D[idx(0, 0)] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            const double best = std::min({D[idx(i - 1, j - 1)], D[idx(i - 1, j)], D[idx(i, j - 1)]});
            D[idx(i, j)] = cost(i - 1, j - 1) + best;
        }
    }
    DtwResult r;
    r.cost = D[idx(n, m)];
    if (!want_path) return r;
    std::size_t i = n, j = m;
    r.path.emplace_back(i - 1, j - 1);
    while (i > 1 || j > 1) {
        if (i == 1) {
            --j;
        } else if (j == 1) {
            --i;
        } else {
            const double diag = D[idx(i - 1, j - 1)], up = D[idx(i - 1, j)], left = D[idx(i, j - 1)];
            if (diag <= up && diag <= left) {
                --i;
                --j;
            } else if (up <= left) {
                --i;
            } else {
                --j;
            }
        }
        r.path.emplace_back(i - 1, j - 1);
    }
    std::reverse(r.path.begin(), r.path.end());
    return r;
}

}  // namespace detail

/// Scalar DTW with a point cost function d(s_i, t_j).
template <class Dist>
DtwResult dtw(std::span<const double> s, std::span<const double> t, Dist&& d, bool want_path = true) {
    return detail::dtw_grid(
        s.size(), t.size(), [&](std::size_t i, std::size_t j) { return d(s[i], t[j]); }, want_path);
}

inline DtwResult dtw_abs(std::span<const double> s, std::span<const double> t, bool want_path = true) {
    return dtw(s, t, [](double a, double b) { return std::abs(a - b); }, want_path);
}

inline DtwResult dtw_sq(std::span<const double> s, std::span<const double> t, bool want_path = true) {
    return dtw(s, t, [](double a, double b) { return (a - b) * (a - b); }, want_path);
}

/// DTW over series rows. Defaults to absolute difference for one channel and
/// Euclidean distance otherwise.
inline DtwResult dtw_distance(const TimeSeries& s, const TimeSeries& t, PointMetric metric = {}) {
    if (s.empty() || t.empty()) throw UsageError("DTW inputs must be non-empty");
    if (s.channels != t.channels) throw UsageError("DTW inputs must share channel count");
    if (!metric) metric = s.channels == 1 ? PointMetric(absolute_distance) : PointMetric(euclidean_distance);
    return detail::dtw_grid(
        s.size(), t.size(), [&](std::size_t i, std::size_t j) { return metric(s.row(i), t.row(j)); }, true);
}

}  // namespace sass::eventsync
