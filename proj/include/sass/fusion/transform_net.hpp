#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sass/error.hpp"
#include "sass/fusion/types.hpp"

namespace sass::fusion {

struct NetArchitecture {
    std::vector<int> hidden{32, 32};

    std::vector<int> widths() const {
        std::vector<int> w{2};
        w.insert(w.end(), hidden.begin(), hidden.end());
        w.push_back(2);
        return w;
    }
    std::size_t parameter_count() const {
        const auto w = widths();
        std::size_t n = 0;
        for (std::size_t l = 1; l < w.size(); ++l) n += static_cast<std::size_t>((w[l - 1] + 1) * w[l]);
        return n;
    }
};

enum class WeightInit { glorot, zero };

struct NetTrainingConfig {
    std::size_t epochs = 4000;
    double step_size = 0.05;
    double step_growth = 1.05;  // applied after each accepted step
    double holdout_fraction = 0.2;
    std::size_t patience = 500;  // epochs without held-out improvement
    WeightInit init = WeightInit::glorot;

    void validate() const {
        if (epochs == 0) throw ConfigError("epochs must be positive");
        if (!(step_size > 0.0)) throw ConfigError("step size must be positive");
        if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw ConfigError("holdout fraction outside [0,1)");
    }
};

/// 2 -> hidden (tanh) -> 2 regressor on standardised coordinates.
struct TransformNet {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Eigen::Vector2d in_mean = Eigen::Vector2d::Zero(), in_scale = Eigen::Vector2d::Ones();
    Eigen::Vector2d out_mean = Eigen::Vector2d::Zero(), out_scale = Eigen::Vector2d::Ones();

    std::size_t layers() const { return weights.size(); }

    /// Raw network on standardised inputs (columns are points).
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd a = x;
        for (std::size_t l = 0; l < layers(); ++l) {
            Eigen::MatrixXd z = (weights[l] * a).colwise() + biases[l];
            a = l + 1 < layers() ? Eigen::MatrixXd(z.array().tanh()) : z;
        }
        return a;
    }

    Point2 apply(const Point2& p) const {
        Eigen::MatrixXd x(2, 1);
        x << (p.x - in_mean.x()) / in_scale.x(), (p.y - in_mean.y()) / in_scale.y();
        const Eigen::MatrixXd y = forward(x);
        return {y(0, 0) * out_scale.x() + out_mean.x(), y(1, 0) * out_scale.y() + out_mean.y()};
    }

    bool finite() const {
        for (std::size_t l = 0; l < layers(); ++l)
            if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
        return true;
    }

    Eigen::VectorXd flatten() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < layers(); ++l) n += weights[l].size() + biases[l].size();
        Eigen::VectorXd v(n);
        std::size_t k = 0;
        for (std::size_t l = 0; l < layers(); ++l) {
            v.segment(k, weights[l].size()) = weights[l].reshaped();
            k += weights[l].size();
            v.segment(k, biases[l].size()) = biases[l];
            k += biases[l].size();
        }
        return v;
    }

    void unflatten(const Eigen::VectorXd& v) {
        std::size_t k = 0;
        for (std::size_t l = 0; l < layers(); ++l) {
            weights[l].reshaped() = v.segment(k, weights[l].size());
            k += weights[l].size();
            biases[l] = v.segment(k, biases[l].size());
            k += biases[l].size();
        }
    }
};

inline TransformNet make_net(const NetArchitecture& arch, WeightInit init, std::uint64_t seed) {
    const auto w = arch.widths();
    std::mt19937_64 rng(seed);
    TransformNet net;
    for (std::size_t l = 1; l < w.size(); ++l) {
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(w[l], w[l - 1]);
        if (init == WeightInit::glorot) {
            const double lim = std::sqrt(6.0 / (w[l] + w[l - 1]));
            std::uniform_real_distribution<double> u(-lim, lim);
            for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = u(rng);
        }
        net.weights.push_back(W);
        net.biases.push_back(Eigen::VectorXd::Zero(w[l]));
    }
    return net;
}

/// Mean squared error over all output entries, and its gradient (flattened
/// in TransformNet::flatten order). x, y are standardised, one point per column.
inline double loss_and_gradient(const TransformNet& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                Eigen::VectorXd* grad) {
    const std::size_t L = net.layers();
    std::vector<Eigen::MatrixXd> acts{x};
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd z = (net.weights[l] * acts.back()).colwise() + net.biases[l];
        acts.push_back(l + 1 < L ? Eigen::MatrixXd(z.array().tanh()) : z);
    }
    const Eigen::MatrixXd diff = acts.back() - y;
    const double count = static_cast<double>(diff.size());
    const double loss = diff.squaredNorm() / count;
    if (!grad) return loss;

    std::vector<Eigen::MatrixXd> gw(L);
    std::vector<Eigen::VectorXd> gb(L);
    Eigen::MatrixXd delta = (2.0 / count) * diff;
    for (std::size_t l = L; l-- > 0;) {
        gw[l] = delta * acts[l].transpose();
        gb[l] = delta.rowwise().sum();
        if (l > 0) delta = (net.weights[l].transpose() * delta).array() * (1.0 - acts[l].array().square());
    }
    grad->resize(net.flatten().size());
    std::size_t k = 0;
    for (std::size_t l = 0; l < L; ++l) {
        grad->segment(k, gw[l].size()) = gw[l].reshaped();
        k += gw[l].size();
        grad->segment(k, gb[l].size()) = gb[l];
        k += gb[l].size();
    }
    return loss;
}

/// Largest per-parameter relative error between backprop and central differences.
inline double gradient_check(const TransformNet& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             double h = 1e-6) {
    Eigen::VectorXd g;
    loss_and_gradient(net, x, y, &g);
    TransformNet probe = net;
    const Eigen::VectorXd theta = net.flatten();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd t = theta;
        t(i) += h;
        probe.unflatten(t);
        const double up = loss_and_gradient(probe, x, y, nullptr);
        t(i) -= 2.0 * h;
        probe.unflatten(t);
        const double down = loss_and_gradient(probe, x, y, nullptr);
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(g(i)), std::abs(fd), 1e-6});
        worst = std::max(worst, std::abs(g(i) - fd) / denom);
    }
    return worst;
}

struct NetTrainingResult {
    TransformNet net;
    double train_rmse = 0.0;    // target units, Euclidean per point
    double holdout_rmse = 0.0;  // NaN without a held-out split
    std::vector<double> loss_history;  // accepted training loss per epoch
    std::size_t epochs_run = 0;
};

namespace detail {

inline std::pair<Eigen::Vector2d, Eigen::Vector2d> moments(const Eigen::MatrixXd& m) {
    const Eigen::Vector2d mean = m.rowwise().mean();
    Eigen::Vector2d sd = ((m.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(m.cols())).sqrt();
    for (int i = 0; i < 2; ++i)
        if (!(sd(i) > 0.0)) sd(i) = 1.0;
    return {mean, sd};
}

inline double rmse(const TransformNet& net, std::span<const PointPair> pairs) {
    if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (const auto& p : pairs) {
        const Point2 q = net.apply(p.source);
        s += (q.x - p.target.x) * (q.x - p.target.x) + (q.y - p.target.y) * (q.y - p.target.y);
    }
    return std::sqrt(s / static_cast<double>(pairs.size()));
}

}  // namespace detail

inline NetTrainingResult fit_transform_net(std::span<const PointPair> pairs, const NetArchitecture& arch,
                                           const NetTrainingConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::size_t params = arch.parameter_count();
    if (pairs.size() * 4 < params)
        throw ConfigError("need at least " + std::to_string((params + 3) / 4) + " point pairs for " +
                          std::to_string(params) + " parameters");

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_hold = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(pairs.size())));
    std::vector<PointPair> train, hold;
    for (std::size_t k = 0; k < order.size(); ++k) (k < n_hold ? hold : train).push_back(pairs[order[k]]);

    auto as_matrix = [](const std::vector<PointPair>& v, bool source) {
        Eigen::MatrixXd m(2, static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Point2& p = source ? v[i].source : v[i].target;
            m(0, static_cast<Eigen::Index>(i)) = p.x;
            m(1, static_cast<Eigen::Index>(i)) = p.y;
        }
        return m;
    };
    NetTrainingResult r;
    r.net = make_net(arch, cfg.init, rng());
    const Eigen::MatrixXd xs_raw = as_matrix(train, true), ys_raw = as_matrix(train, false);
    std::tie(r.net.in_mean, r.net.in_scale) = detail::moments(xs_raw);
    std::tie(r.net.out_mean, r.net.out_scale) = detail::moments(ys_raw);
    auto standardise = [](Eigen::MatrixXd m, const Eigen::Vector2d& mean, const Eigen::Vector2d& sd) {
        m = m.colwise() - mean;
        m = sd.cwiseInverse().asDiagonal() * m;
        return m;
    };
    const Eigen::MatrixXd X = standardise(xs_raw, r.net.in_mean, r.net.in_scale);
    const Eigen::MatrixXd Y = standardise(ys_raw, r.net.out_mean, r.net.out_scale);
    Eigen::MatrixXd Xh, Yh;
    if (!hold.empty()) {
        Xh = standardise(as_matrix(hold, true), r.net.in_mean, r.net.in_scale);
        Yh = standardise(as_matrix(hold, false), r.net.out_mean, r.net.out_scale);
    }

    // Full-batch descent; a step that raises the loss is rejected and the step
    // size halved, so the accepted loss sequence never increases.
    Eigen::VectorXd theta = r.net.flatten(), grad;
    TransformNet trial = r.net;
    double loss = loss_and_gradient(r.net, X, Y, &grad);
    if (!std::isfinite(loss)) throw TrainingError("initial loss is not finite");
    r.loss_history.push_back(loss);
    double step = cfg.step_size;
    double best_hold = hold.empty() ? 0.0 : loss_and_gradient(r.net, Xh, Yh, nullptr);
    Eigen::VectorXd best_theta = theta;
    std::size_t since_best = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        r.epochs_run = epoch + 1;
        if (loss == 0.0) break;
        const Eigen::VectorXd cand = theta - step * grad;
        trial.unflatten(cand);
        Eigen::VectorXd cand_grad;
        const double cand_loss = loss_and_gradient(trial, X, Y, &cand_grad);
        if (std::isnan(cand_loss)) throw TrainingError("training diverged: loss is NaN");
        if (cand_loss <= loss) {
            theta = cand;
            grad = cand_grad;
            loss = cand_loss;
            step *= cfg.step_growth;
        } else {
            step *= 0.5;
            if (step < 1e-14) break;
        }
        r.loss_history.push_back(loss);
        if (!hold.empty()) {
            r.net.unflatten(theta);
            const double h = loss_and_gradient(r.net, Xh, Yh, nullptr);
            if (h < best_hold) {
                best_hold = h;
                best_theta = theta;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
    }
    r.net.unflatten(hold.empty() ? theta : best_theta);
    if (!r.net.finite()) throw TrainingError("training produced non-finite weights");
    r.train_rmse = detail::rmse(r.net, train);
    r.holdout_rmse = detail::rmse(r.net, hold);
    return r;
}

inline nlohmann::json to_json(const TransformNet& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.layers(); ++l) {
        std::vector<double> w(net.weights[l].data(), net.weights[l].data() + net.weights[l].size());
        std::vector<double> b(net.biases[l].data(), net.biases[l].data() + net.biases[l].size());
        layers.push_back({{"rows", net.weights[l].rows()}, {"cols", net.weights[l].cols()}, {"w", w}, {"b", b}});
    }
    auto vec = [](const Eigen::Vector2d& v) { return std::vector<double>{v.x(), v.y()}; };
    return {{"layers", layers},
            {"in_mean", vec(net.in_mean)},
            {"in_scale", vec(net.in_scale)},
            {"out_mean", vec(net.out_mean)},
            {"out_scale", vec(net.out_scale)}};
}

inline TransformNet net_from_json(const nlohmann::json& j) {
    TransformNet net;
    try {
        for (const auto& layer : j.at("layers")) {
            const auto rows = layer.at("rows").get<Eigen::Index>(), cols = layer.at("cols").get<Eigen::Index>();
            const auto w = layer.at("w").get<std::vector<double>>();
            const auto b = layer.at("b").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows)
                throw ValidationError("layer shape does not match its weights");
            net.weights.push_back(Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols));
            net.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
        }
        auto vec = [&](const char* k) {
            const auto v = j.at(k).get<std::vector<double>>();
            if (v.size() != 2) throw ValidationError(std::string(k) + " must have 2 entries");
            return Eigen::Vector2d(v[0], v[1]);
        };
        net.in_mean = vec("in_mean");
        net.in_scale = vec("in_scale");
        net.out_mean = vec("out_mean");
        net.out_scale = vec("out_scale");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad network record: ") + e.what());
    }
    if (!net.finite()) throw ValidationError("network weights are not finite");
    return net;
}

}  // namespace sass::fusion
