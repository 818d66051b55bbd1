#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "sass/fusion.hpp"

using namespace sass;
using namespace sass::fusion;

namespace {

Homography random_homography(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> small(-0.2, 0.2), shift(-20.0, 20.0), persp(-1e-3, 1e-3);
    Homography H;
    H << 1.0 + small(rng), small(rng), shift(rng), small(rng), 1.0 + small(rng), shift(rng), persp(rng), persp(rng), 1.0;
    return H;
}

std::vector<PointPair> pairs_from(const Homography& H, std::size_t n, std::mt19937_64& rng, double extent = 100.0) {
    std::uniform_real_distribution<double> u(0.0, extent);
    std::vector<PointPair> out;
    while (out.size() < n) {
        const Point2 s{u(rng), u(rng)};
        Point2 t;
        if (apply_homography(H, s, t)) out.push_back({s, t});
    }
    return out;
}

double relative_error(const Homography& a, const Homography& b) { return (a - b).norm() / b.norm(); }

Detection det(const std::string& cam, double x, double y, double conf = 1.0, ObjectClass c = ObjectClass::pedestrian) {
    return {cam, c, {x, y}, conf, Timestamp{0}};
}

// Andrew's monotone chain; true when p is inside or on the hull.
bool inside_hull(std::vector<Point2> pts, const Point2& p) {
    auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
    if (pts.size() == 1) return distance(pts[0], p) < 1e-9;
    std::vector<Point2> hull;
    for (int pass = 0; pass < 2; ++pass) {
        const std::size_t base = hull.size();
        for (const auto& q : pts) {
            while (hull.size() >= base + 2 && cross(hull[hull.size() - 2], hull.back(), q) <= 0) hull.pop_back();
            hull.push_back(q);
        }
        hull.pop_back();
        std::reverse(pts.begin(), pts.end());
    }
    if (hull.size() < 3) {  // degenerate: segment
        const Point2 a = pts.front(), b = pts.back();
        return std::abs(cross(a, b, p)) < 1e-9 && std::min(a.x, b.x) - 1e-9 <= p.x && p.x <= std::max(a.x, b.x) + 1e-9 &&
               std::min(a.y, b.y) - 1e-9 <= p.y && p.y <= std::max(a.y, b.y) + 1e-9;
    }
    for (std::size_t i = 0; i < hull.size(); ++i)
        if (cross(hull[i], hull[(i + 1) % hull.size()], p) < -1e-9) return false;
    return true;
}

}  // namespace

// ---- DLT ----

TEST(Dlt, UnitSquareIdentity) {
    const std::vector<PointPair> p{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{1, 1}, {1, 1}}, {{0, 1}, {0, 1}}};
    EXPECT_LT((fit_homography_dlt(p) - Homography::Identity()).norm(), 1e-12);
}

TEST(Dlt, PureTranslation) {
    std::vector<PointPair> p;
    for (auto [x, y] : {std::pair{0.0, 0.0}, {4.0, 0.0}, {4.0, 3.0}, {0.0, 3.0}, {2.0, 1.0}})
        p.push_back({{x, y}, {x + 5.0, y - 3.0}});
    Homography T;
    T << 1, 0, 5, 0, 1, -3, 0, 0, 1;
    EXPECT_LT((fit_homography_dlt(p) - T).norm(), 1e-10);
}

TEST(Dlt, RecoversRandomKnownHomographies) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        const Homography H = random_homography(rng);
        const auto pairs = pairs_from(H, 8, rng);
        const Homography F = fit_homography_dlt(pairs);
        EXPECT_LT(relative_error(F, H), 1e-6) << "seed " << seed;
        for (const auto& p : pairs) EXPECT_LT(transfer_error(F, p), 1e-6);
    }
}

TEST(Dlt, DegenerateConfigurationsNamed) {
    const std::vector<PointPair> three{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    try {
        fit_homography_dlt(three);
        FAIL();
    } catch (const FitError& e) {
        EXPECT_NE(std::string(e.what()).find("at least 4"), std::string::npos);
    }
    const std::vector<PointPair> col{{{0, 0}, {0, 0}}, {{1, 1}, {1, 0}}, {{2, 2}, {1, 1}}, {{0, 1}, {0, 1}}};
    try {
        fit_homography_dlt(col);
        FAIL();
    } catch (const FitError& e) {
        EXPECT_NE(std::string(e.what()).find("collinear"), std::string::npos);
    }
    std::vector<PointPair> line;
    for (int i = 0; i < 6; ++i) line.push_back({{double(i), 2.0 * i}, {double(i), double(i)}});
    EXPECT_THROW(fit_homography_dlt(line), FitError);
}

// ---- RANSAC ----

TEST(Ransac, AllInliersAndDeterminism) {
    std::mt19937_64 rng(3);
    const Homography H = random_homography(rng);
    const auto pairs = pairs_from(H, 15, rng);
    const auto r = ransac_fit(pairs, 0.5, 100, 11);
    EXPECT_EQ(r.inlier_count, pairs.size());
    const auto again = ransac_fit(pairs, 0.5, 100, 11);
    EXPECT_EQ(r.H, again.H);
    EXPECT_EQ(r.inliers, again.inliers);
}

TEST(Ransac, RejectsUniformOutliers) {
    std::mt19937_64 rng(17);
    const Homography H = random_homography(rng);
    auto pairs = pairs_from(H, 20, rng);
    std::uniform_real_distribution<double> u(0.0, 120.0);
    for (int k = 0; k < 10; ++k) pairs.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
    const auto r = ransac_fit(pairs, 1.0, 500, 5);
    EXPECT_LT(relative_error(r.H, H), 1e-4);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_TRUE(r.inliers[i]);
    for (std::size_t i = 20; i < 30; ++i) EXPECT_FALSE(r.inliers[i]) << i;
}

TEST(Ransac, InlierSetContainsTrueInliersUpToFortyPercentOutliers) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        const Homography H = random_homography(rng);
        auto pairs = pairs_from(H, 18, rng);
        std::uniform_real_distribution<double> u(0.0, 120.0);
        for (int k = 0; k < 12; ++k) pairs.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
        const auto r = ransac_fit(pairs, 1.0, 1000, seed);
        bool all = true;
        for (std::size_t i = 0; i < 18; ++i) all = all && r.inliers[i];
        ok += all;
    }
    EXPECT_EQ(ok, 100);
}

TEST(Ransac, TooFewPairs) {
    const std::vector<PointPair> p{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    EXPECT_THROW(ransac_fit(p, 1.0, 10, 0), FitError);
}

// ---- learned transform ----

TEST(TransformNet, ZeroInitZeroTargetsHasZeroLoss) {
    std::vector<PointPair> pairs;
    for (int i = 0; i < 400; ++i) pairs.push_back({{double(i % 20), double(i / 20)}, {0.0, 0.0}});
    NetTrainingConfig cfg;
    cfg.init = WeightInit::zero;
    cfg.epochs = 5;
    const auto r = fit_transform_net(pairs, {}, cfg, 1);
    EXPECT_EQ(r.loss_history.front(), 0.0);
    EXPECT_EQ(r.train_rmse, 0.0);
}

TEST(TransformNet, ParameterCountAndPairGuard) {
    NetArchitecture arch;
    EXPECT_EQ(arch.parameter_count(), 1218u);
    std::vector<PointPair> few(100, PointPair{{0, 0}, {0, 0}});
    EXPECT_THROW(fit_transform_net(few, arch, {}, 0), ConfigError);
}

TEST(TransformNet, GradientMatchesFiniteDifferences) {
    const auto net = make_net({}, WeightInit::glorot, 7);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(2, 16), y(2, 16);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x.data()[i] = g(rng);
        y.data()[i] = g(rng);
    }
    EXPECT_LT(gradient_check(net, x, y), 1e-4);
}

TEST(TransformNet, LearnsAffineMap) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 640.0);
    std::vector<PointPair> pairs;
    for (int i = 0; i < 500; ++i) {
        const Point2 s{u(rng), u(rng) * 0.75};
        pairs.push_back({s, {0.05 * s.x - 0.01 * s.y + 3.0, 0.02 * s.x + 0.06 * s.y - 7.0}});
    }
    const auto r = fit_transform_net(pairs, {}, {}, 9);
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    for (const auto& p : pairs) {
        lo_x = std::min(lo_x, p.target.x);
        hi_x = std::max(hi_x, p.target.x);
        lo_y = std::min(lo_y, p.target.y);
        hi_y = std::max(hi_y, p.target.y);
    }
    const double extent = std::max(hi_x - lo_x, hi_y - lo_y);
    EXPECT_LT(r.holdout_rmse, 0.01 * extent);
    for (std::size_t k = 1; k < r.loss_history.size(); ++k) EXPECT_LE(r.loss_history[k], r.loss_history[k - 1]);
}

TEST(TransformNet, WithinTwiceHomographyBaseline) {
    std::mt19937_64 rng(6);
    Homography H;
    H << 0.04, 0.01, -5.0, -0.005, 0.09, -2.0, 0.0, 0.0012, 1.0;
    std::uniform_real_distribution<double> ux(0.0, 640.0), uy(0.0, 480.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<PointPair> pairs;
    while (pairs.size() < 600) {
        const Point2 s{ux(rng), uy(rng)};
        Point2 t;
        if (!apply_homography(H, s, t)) continue;
        pairs.push_back({s, {t.x + noise(rng), t.y + noise(rng)}});
    }
    const std::vector<PointPair> train(pairs.begin(), pairs.begin() + 480), test(pairs.begin() + 480, pairs.end());
    NetTrainingConfig cfg;
    cfg.epochs = 8000;
    const auto net = fit_transform_net(train, {}, cfg, 3).net;
    const Homography F = fit_homography_dlt(train);
    double e_net = 0.0, e_dlt = 0.0;
    for (const auto& p : test) {
        const Point2 q = net.apply(p.source);
        e_net += std::pow(distance(q, p.target), 2);
        e_dlt += std::pow(transfer_error(F, p), 2);
    }
    e_net = std::sqrt(e_net / test.size());
    e_dlt = std::sqrt(e_dlt / test.size());
    EXPECT_LT(e_net, 2.0 * e_dlt) << "net " << e_net << " dlt " << e_dlt;
}

// ---- projection ----

TEST(Project, IdentityAndMatrixArithmetic) {
    const std::vector<Detection> d{det("a", 3, 4), det("a", -1, 2, 0.3, ObjectClass::vehicle)};
    const auto id = project(d, PerspectiveTransform::from_homography(Homography::Identity()));
    ASSERT_EQ(id.projected.size(), 2u);
    EXPECT_EQ(id.projected[0].center, d[0].center);
    EXPECT_EQ(id.projected[1].cls, ObjectClass::vehicle);
    EXPECT_EQ(id.projected[1].confidence, 0.3);

    Homography H;
    H << 2, 1, 3, 0, 1, -1, 0.01, 0.02, 1;
    const auto p = project(d, PerspectiveTransform::from_homography(H));
    const double w = 0.01 * 3 + 0.02 * 4 + 1;
    EXPECT_NEAR(p.projected[0].center.x, (2 * 3 + 1 * 4 + 3) / w, 1e-12);
    EXPECT_NEAR(p.projected[0].center.y, (4 - 1) / w, 1e-12);
}

TEST(Project, CompositionIsMatrixProduct) {
    std::mt19937_64 rng(8);
    const Homography A = random_homography(rng), B = random_homography(rng);
    std::vector<Detection> d;
    for (int i = 0; i < 20; ++i) d.push_back(det("c", i * 3.0, 50.0 - i));
    const auto two = project(project(d, PerspectiveTransform::from_homography(A)).projected,
                             PerspectiveTransform::from_homography(B));
    const auto one = project(d, PerspectiveTransform::from_homography(B * A));
    ASSERT_EQ(one.projected.size(), two.projected.size());
    for (std::size_t i = 0; i < one.projected.size(); ++i)
        EXPECT_LT(distance(one.projected[i].center, two.projected[i].center), 1e-9);
}

TEST(Project, PointsAtInfinityDropped) {
    Homography H;
    H << 1, 0, 0, 0, 1, 0, 1, 0, 1;  // w = x + 1
    const auto r = project({det("a", -1, 5), det("a", 2, 5)}, PerspectiveTransform::from_homography(H));
    ASSERT_EQ(r.dropped, std::vector<std::size_t>{0});
    EXPECT_EQ(r.projected.size(), 1u);
}

TEST(Project, TransformJsonRoundTrip) {
    Homography H;
    H << 2, 1, 3, 0, 1, -1, 0.01, 0.02, 1;
    const auto back = transform_from_json(to_json(PerspectiveTransform::from_homography(H)));
    EXPECT_EQ(back.matrix, H);
    const auto net = PerspectiveTransform::from_net(make_net({}, WeightInit::glorot, 1));
    const auto nb = transform_from_json(nlohmann::json::parse(to_json(net).dump()));
    Point2 a, b;
    net.map({1.5, 2.5}, a);
    nb.map({1.5, 2.5}, b);
    EXPECT_EQ(a, b);
    Homography S = Homography::Zero();
    S(2, 2) = 1;
    EXPECT_THROW(PerspectiveTransform::from_homography(S), ValidationError);
}

// ---- dedup ----

TEST(Dedup, ForcedArithmeticExamples) {
    EXPECT_EQ(deduplicate({det("a", 0, 0), det("b", 10, 0)}, 5.5).size(), 2u);
    const auto eq = deduplicate({det("a", 0, 0, 0.5), det("b", 1, 0, 0.5)}, 2.0);
    ASSERT_EQ(eq.size(), 1u);
    EXPECT_DOUBLE_EQ(eq[0].center.x, 0.5);
    const auto w = deduplicate({det("a", 0, 0, 0.9), det("b", 1, 0, 0.1)}, 2.0);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_NEAR(w[0].center.x, 0.1, 1e-15);
    EXPECT_EQ(w[0].confidence, 0.9);
    EXPECT_EQ(w[0].merge_count, 2u);
    EXPECT_EQ(w[0].cameras, (std::vector<std::string>{"a", "b"}));
}

TEST(Dedup, ClassAndCameraRules) {
    EXPECT_EQ(deduplicate({det("a", 0, 0), det("b", 0.1, 0, 1.0, ObjectClass::vehicle)}, 2.0).size(), 2u);
    EXPECT_EQ(deduplicate({det("a", 0, 0), det("a", 0.1, 0)}, 2.0).size(), 2u);
    EXPECT_EQ(deduplicate({det("a", 0, 0), det("b", 0, 0)}, 0.0).size(), 2u);
    // Chain a-b-c where a and c are 3 m apart merges as one component.
    EXPECT_EQ(deduplicate({det("a", 0, 0), det("b", 1.5, 0), det("c", 3.0, 0)}, 2.0).size(), 1u);
}

TEST(Dedup, RandomisedProperties) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 20.0), c(0.05, 1.0);
        std::uniform_int_distribution<int> cam(0, 2), cls(0, 1);
        std::vector<Detection> d;
        for (int i = 0; i < 40; ++i)
            d.push_back(det("cam" + std::to_string(cam(rng)), u(rng), u(rng), c(rng), cls(rng) ? ObjectClass::vehicle : ObjectClass::pedestrian));
        const auto f = deduplicate(d, 3.0);
        EXPECT_LE(f.size(), d.size());
        auto relabeled = d;
        for (auto& x : relabeled) x.camera_id = "z" + x.camera_id;
        const auto g = deduplicate(relabeled, 3.0);
        ASSERT_EQ(g.size(), f.size());
        for (std::size_t i = 0; i < f.size(); ++i) {
            EXPECT_EQ(f[i].center, g[i].center);
            EXPECT_EQ(f[i].merge_count, g[i].merge_count);
        }
        // Each fused centre lies in the hull of nearby same-class inputs it could have absorbed.
        for (const auto& x : f) {
            std::vector<Point2> members;
            for (const auto& y : d)
                if (y.cls == x.cls && distance(y.center, x.center) < 3.0 * x.merge_count) members.push_back(y.center);
            EXPECT_TRUE(inside_hull(members, x.center));
            EXPECT_GE(x.confidence, 0.0);
            EXPECT_LE(x.confidence, 1.0);
        }
    }
}

// ---- evaluation ----

TEST(Evaluate, PerfectOverlapAndF1Identity) {
    std::vector<Detection> truth{det("gt", 0, 0), det("gt", 10, 10, 1.0, ObjectClass::vehicle)};
    const auto s = evaluate_detections(truth, truth);
    for (ObjectClass c : kAllClasses) {
        EXPECT_EQ(s.at(c).precision, 1.0);
        EXPECT_EQ(s.at(c).recall, 1.0);
        EXPECT_EQ(s.at(c).f1, 1.0);
    }
    const auto half = evaluate_detections(std::vector<Detection>{det("a", 0.5, 0), det("a", 30, 0)}, truth);
    const auto& p = half.at(ObjectClass::pedestrian);
    EXPECT_EQ(p.precision, 0.5);
    EXPECT_EQ(p.recall, 1.0);
    EXPECT_NEAR(p.f1, 2 * p.precision * p.recall / (p.precision + p.recall), 1e-15);
    // Different frame never matches.
    auto other = truth;
    for (auto& x : other) x.frame_ts = Timestamp{1};
    EXPECT_EQ(evaluate_detections(other, truth).at(ObjectClass::pedestrian).true_positives, 0u);
}

TEST(Sweep, ZeroThresholdKeepsEverythingAndMergesMonotone) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> jitter(0.0, 0.6);
    std::vector<Detection> truth, top;
    for (int i = 0; i < 30; ++i) {
        const Point2 p{3.0 * i, 0.0};
        truth.push_back(det("gt", p.x, p.y));
        top.push_back(det("a", p.x + jitter(rng), p.y + jitter(rng), 0.8));
        top.push_back(det("b", p.x + jitter(rng), p.y + jitter(rng), 0.6));
    }
    const auto rows = threshold_sweep(top, truth, default_sweep_thresholds());
    std::size_t prev_fused = 0;
    double prev_recall = -1.0;
    for (const auto& r : rows) {
        if (r.cls != ObjectClass::pedestrian) continue;
        EXPECT_GE(r.fused_count, prev_fused);  // thresholds descend
        EXPECT_GE(r.scores.recall, prev_recall - 1e-12);
        prev_fused = r.fused_count;
        prev_recall = r.scores.recall;
        EXPECT_NEAR(r.scores.f1, r.scores.precision + r.scores.recall > 0
                                     ? 2 * r.scores.precision * r.scores.recall / (r.scores.precision + r.scores.recall)
                                     : 0.0,
                    1e-15);
    }
    EXPECT_EQ(rows.back().threshold, 0.0);
    EXPECT_EQ(rows[rows.size() - 2].fused_count, top.size());
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    EXPECT_EQ(csv.str().rfind("threshold,class,precision,recall", 0), 0u);
}
