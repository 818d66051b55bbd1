#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include <json.hpp>

#include "sass/error.hpp"

namespace sass::eventsync {

using Observation = std::vector<double>;
using ObservationSequence = std::vector<Observation>;

/// Discrete-state HMM with diagonal-Gaussian emissions.
struct HmmModel {
    std::vector<double> initial;
    std::vector<std::vector<double>> transition;
    std::vector<std::vector<double>> means;
    std::vector<std::vector<double>> variances;

    std::size_t n_states() const { return initial.size(); }
    std::size_t dimension() const { return means.empty() ? 0 : means.front().size(); }

    double log_emission(std::size_t state, const Observation& x) const {
        double lp = 0.0;
        const auto& mu = means[state];
        const auto& var = variances[state];
        for (std::size_t d = 0; d < mu.size(); ++d) {
            const double e = x[d] - mu[d];
            lp -= 0.5 * (std::log(2.0 * std::numbers::pi * var[d]) + e * e / var[d]);
        }
        return lp;
    }

    void validate() const {
        const std::size_t n = n_states();
        if (n == 0) throw ConfigError("HMM needs at least one state");
        if (transition.size() != n || means.size() != n || variances.size() != n)
            throw ConfigError("HMM parameter shapes disagree");
        auto stochastic = [](const std::vector<double>& p) {
            return std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9 &&
                   std::all_of(p.begin(), p.end(), [](double v) { return v >= 0.0; });
        };
        if (!stochastic(initial)) throw ConfigError("initial distribution must sum to 1");
        for (const auto& row : transition)
            if (row.size() != n || !stochastic(row)) throw ConfigError("transition rows must sum to 1");
        for (std::size_t s = 0; s < n; ++s) {
            if (variances[s].size() != means[s].size() || means[s].size() != dimension())
                throw ConfigError("emission dimensions disagree");
            for (double v : variances[s])
                if (!(v > 0.0)) throw ConfigError("emission variances must be positive");
        }
    }
};

inline constexpr int kHmmFormatVersion = 1;

inline nlohmann::json to_json(const HmmModel& m) {
    return {{"version", kHmmFormatVersion}, {"kind", "hmm"},           {"initial", m.initial},
            {"transition", m.transition},   {"means", m.means},       {"variances", m.variances}};
}

inline HmmModel hmm_from_json(const nlohmann::json& j) {
    if (j.value("version", 0) != kHmmFormatVersion) throw ValidationError("unsupported HMM version");
    HmmModel m;
    m.initial = j.at("initial").get<std::vector<double>>();
    m.transition = j.at("transition").get<std::vector<std::vector<double>>>();
    m.means = j.at("means").get<std::vector<std::vector<double>>>();
    m.variances = j.at("variances").get<std::vector<std::vector<double>>>();
    m.validate();
    return m;
}

namespace detail {

struct ForwardBackward {
    double log_likelihood = 0.0;
    std::vector<std::vector<double>> gamma;              // T x N
    std::vector<std::vector<std::vector<double>>> xi;    // (T-1) x N x N, summed later
};

// Scaled forward-backward. Emissions are shifted by their per-step maximum
// before exponentiation so long or sharply peaked sequences stay finite.
inline ForwardBackward forward_backward(const HmmModel& m, const ObservationSequence& obs, bool want_xi) {
    const std::size_t T = obs.size(), N = m.n_states();
    std::vector<std::vector<double>> e(T, std::vector<double>(N));
    std::vector<double> shift(T);
    for (std::size_t t = 0; t < T; ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < N; ++j) mx = std::max(mx, e[t][j] = m.log_emission(j, obs[t]));
        shift[t] = mx;
        for (std::size_t j = 0; j < N; ++j) e[t][j] = std::exp(e[t][j] - mx);
    }
    std::vector<std::vector<double>> alpha(T, std::vector<double>(N)), beta(T, std::vector<double>(N, 1.0));
    std::vector<double> c(T);
    ForwardBackward fb;
    for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            double p = 0.0;
            if (t == 0) {
                p = m.initial[j];
            } else {
                for (std::size_t i = 0; i < N; ++i) p += alpha[t - 1][i] * m.transition[i][j];
            }
            alpha[t][j] = p * e[t][j];
            sum += alpha[t][j];
        }
        if (!(sum > 0.0)) throw DomainError("observation sequence has zero likelihood under the model");
        c[t] = sum;
        for (auto& a : alpha[t]) a /= sum;
        fb.log_likelihood += std::log(sum) + shift[t];
    }
    for (std::size_t t = T - 1; t-- > 0;) {
        for (std::size_t i = 0; i < N; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j) s += m.transition[i][j] * e[t + 1][j] * beta[t + 1][j];
            beta[t][i] = s / c[t + 1];
        }
    }
    fb.gamma.assign(T, std::vector<double>(N));
    for (std::size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += fb.gamma[t][j] = alpha[t][j] * beta[t][j];
        for (auto& g : fb.gamma[t]) g /= s;
    }
    if (want_xi && T > 1) {
        fb.xi.assign(T - 1, std::vector<std::vector<double>>(N, std::vector<double>(N)));
        for (std::size_t t = 0; t + 1 < T; ++t)
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j)
                    fb.xi[t][i][j] = alpha[t][i] * m.transition[i][j] * e[t + 1][j] * beta[t + 1][j] / c[t + 1];
    }
    return fb;
}

inline void check_dimensions(const HmmModel& m, const ObservationSequence& obs) {
    for (const auto& x : obs)
        if (x.size() != m.dimension()) throw UsageError("observation dimension does not match model");
}

}  // namespace detail

/// log P(O | model).
inline double log_likelihood(const HmmModel& m, const ObservationSequence& obs) {
    detail::check_dimensions(m, obs);
    if (obs.empty()) return 0.0;
    return detail::forward_backward(m, obs, false).log_likelihood;
}

struct HmmTrainingOptions {
    double variance_floor = 1e-6;
    double self_transition = 0.9;
};

struct HmmTrainingResult {
    HmmModel model;
    /// Total log-likelihood of the data under the model entering each iteration,
    /// followed by the value under the final model.
    std::vector<double> log_likelihood;
};

/// Reorders states by ascending mean of the first observation dimension.
inline HmmModel canonical_order(const HmmModel& m) {
    std::vector<std::size_t> order(m.n_states());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return m.means[a].front() < m.means[b].front(); });
    HmmModel out = m;
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.initial[i] = m.initial[order[i]];
        out.means[i] = m.means[order[i]];
        out.variances[i] = m.variances[order[i]];
        for (std::size_t j = 0; j < order.size(); ++j) out.transition[i][j] = m.transition[order[i]][order[j]];
    }
    return out;
}

namespace detail {

// Quantile split on a standardised energy score gives each state a distinct
// starting region; the seed perturbs the transition matrix only.
inline HmmModel initial_model(const std::vector<ObservationSequence>& data, std::size_t n_states,
                              std::uint64_t seed, const HmmTrainingOptions& opt) {
    std::vector<const Observation*> all;
    for (const auto& seq : data)
        for (const auto& x : seq) all.push_back(&x);
    const std::size_t D = all.front()->size();
    std::vector<double> mu(D, 0.0), sd(D, 0.0);
    for (auto* x : all)
        for (std::size_t d = 0; d < D; ++d) mu[d] += (*x)[d];
    for (auto& v : mu) v /= static_cast<double>(all.size());
    for (auto* x : all)
        for (std::size_t d = 0; d < D; ++d) sd[d] += ((*x)[d] - mu[d]) * ((*x)[d] - mu[d]);
    for (auto& v : sd) v = std::sqrt(v / static_cast<double>(all.size())) + 1e-12;
    auto energy = [&](const Observation* x) {
        double s = 0.0;
        for (std::size_t d = 0; d < D; ++d) s += ((*x)[d] - mu[d]) / sd[d];
        return s;
    };
    std::stable_sort(all.begin(), all.end(), [&](auto a, auto b) { return energy(a) < energy(b); });

    HmmModel m;
    m.initial.assign(n_states, 1.0 / static_cast<double>(n_states));
    m.means.assign(n_states, std::vector<double>(D, 0.0));
    m.variances.assign(n_states, std::vector<double>(D, 0.0));
    for (std::size_t s = 0; s < n_states; ++s) {
        const std::size_t lo = s * all.size() / n_states, hi = std::max(lo + 1, (s + 1) * all.size() / n_states);
        for (std::size_t k = lo; k < hi; ++k)
            for (std::size_t d = 0; d < D; ++d) m.means[s][d] += (*all[k])[d];
        for (auto& v : m.means[s]) v /= static_cast<double>(hi - lo);
        for (std::size_t k = lo; k < hi; ++k)
            for (std::size_t d = 0; d < D; ++d)
                m.variances[s][d] += ((*all[k])[d] - m.means[s][d]) * ((*all[k])[d] - m.means[s][d]);
        for (std::size_t d = 0; d < D; ++d)
            m.variances[s][d] = std::max(opt.variance_floor, m.variances[s][d] / static_cast<double>(hi - lo));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 0.02);
    m.transition.assign(n_states, std::vector<double>(n_states));
    for (std::size_t i = 0; i < n_states; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n_states; ++j) {
            const double base =
                n_states == 1 ? 1.0 : (i == j ? opt.self_transition : (1.0 - opt.self_transition) / (n_states - 1.0));
            sum += m.transition[i][j] = base + jitter(rng);
        }
        for (auto& p : m.transition[i]) p /= sum;
    }
    return m;
}

}  // namespace detail

/// Baum-Welch over several observation sequences. Deterministic given `seed`.
inline HmmTrainingResult train_hmm(const std::vector<ObservationSequence>& data, std::size_t n_states,
                                   int iterations, std::uint64_t seed, const HmmTrainingOptions& opt = {}) {
    if (n_states < 1) throw UsageError("HMM needs at least one state");
    std::size_t total = 0;
    for (const auto& seq : data) total += seq.size();
    if (total == 0) throw UsageError("HMM training data is empty");
    const std::size_t D = data.front().empty() ? 0 : data.front().front().size();
    for (const auto& seq : data)
        for (const auto& x : seq)
            if (x.size() != D || D == 0) throw UsageError("inconsistent observation dimension");

    HmmTrainingResult result;
    HmmModel m = detail::initial_model(data, n_states, seed, opt);
    const std::size_t N = n_states;
    for (int it = 0; it <= iterations; ++it) {
        double ll = 0.0;
        std::vector<double> pi_acc(N, 0.0), occupancy(N, 0.0), from(N, 0.0);
        std::vector<std::vector<double>> trans(N, std::vector<double>(N, 0.0));
        std::vector<std::vector<double>> sum_x(N, std::vector<double>(D, 0.0)), sum_xx(N, std::vector<double>(D, 0.0));
        std::size_t used = 0;
        for (const auto& seq : data) {
            if (seq.empty()) continue;
            ++used;
            const auto fb = detail::forward_backward(m, seq, it < iterations);
            ll += fb.log_likelihood;
            if (it == iterations) continue;
            for (std::size_t j = 0; j < N; ++j) pi_acc[j] += fb.gamma[0][j];
            for (std::size_t t = 0; t < seq.size(); ++t) {
                for (std::size_t j = 0; j < N; ++j) {
                    const double g = fb.gamma[t][j];
                    occupancy[j] += g;
                    if (t + 1 < seq.size()) from[j] += g;
                    for (std::size_t d = 0; d < D; ++d) {
                        sum_x[j][d] += g * seq[t][d];
                        sum_xx[j][d] += g * seq[t][d] * seq[t][d];
                    }
                }
            }
            for (const auto& slice : fb.xi)
                for (std::size_t i = 0; i < N; ++i)
                    for (std::size_t j = 0; j < N; ++j) trans[i][j] += slice[i][j];
        }
        result.log_likelihood.push_back(ll);
        if (it == iterations) break;

        for (std::size_t j = 0; j < N; ++j) m.initial[j] = pi_acc[j] / static_cast<double>(used);
        for (std::size_t i = 0; i < N; ++i) {
            if (from[i] <= 0.0) continue;
            double row = 0.0;
            for (std::size_t j = 0; j < N; ++j) row += trans[i][j];
            for (std::size_t j = 0; j < N; ++j) m.transition[i][j] = trans[i][j] / row;
        }
        for (std::size_t j = 0; j < N; ++j) {
            if (occupancy[j] <= 0.0) continue;
            for (std::size_t d = 0; d < D; ++d) {
                const double mean = sum_x[j][d] / occupancy[j];
                m.means[j][d] = mean;
                m.variances[j][d] = std::max(opt.variance_floor, sum_xx[j][d] / occupancy[j] - mean * mean);
            }
        }
    }
    result.model = canonical_order(m);
    return result;
}

struct ViterbiResult {
    std::vector<std::size_t> path;
    double log_likelihood = 0.0;  // log P(path, O)
};

/// Maximum-probability state path in log space. Ties resolve to the lower state index.
inline ViterbiResult viterbi_decode(const HmmModel& m, const ObservationSequence& obs) {
    detail::check_dimensions(m, obs);
    ViterbiResult r;
    if (obs.empty()) return r;
    const std::size_t T = obs.size(), N = m.n_states();
    auto safe_log = [](double p) { return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity(); };
    std::vector<std::vector<double>> delta(T, std::vector<double>(N));
    std::vector<std::vector<std::size_t>> back(T, std::vector<std::size_t>(N, 0));
    for (std::size_t j = 0; j < N; ++j) delta[0][j] = safe_log(m.initial[j]) + m.log_emission(j, obs[0]);
    for (std::size_t t = 1; t < T; ++t) {
        for (std::size_t j = 0; j < N; ++j) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t i = 0; i < N; ++i) {
                const double v = delta[t - 1][i] + safe_log(m.transition[i][j]);
                if (v > best) {
                    best = v;
                    arg = i;
                }
            }
            delta[t][j] = best + m.log_emission(j, obs[t]);
            back[t][j] = arg;
        }
    }
    std::size_t last = 0;
    for (std::size_t j = 1; j < N; ++j)
        if (delta[T - 1][j] > delta[T - 1][last]) last = j;
    r.log_likelihood = delta[T - 1][last];
    r.path.assign(T, 0);
    r.path[T - 1] = last;
    for (std::size_t t = T - 1; t > 0; --t) r.path[t - 1] = back[t][r.path[t]];
    return r;
}

/// log P(path, O) for an explicit state path.
inline double path_log_likelihood(const HmmModel& m, const ObservationSequence& obs,
                                  const std::vector<std::size_t>& path) {
    double lp = std::log(m.initial[path[0]]) + m.log_emission(path[0], obs[0]);
    for (std::size_t t = 1; t < obs.size(); ++t)
        lp += std::log(m.transition[path[t - 1]][path[t]]) + m.log_emission(path[t], obs[t]);
    return lp;
}

}  // namespace sass::eventsync
