#include <cmath>
#include <filesystem>
#include <random>

#include "clearing/detection_log.hpp"
#include "clearing/errors.hpp"
#include "clearing/eval.hpp"
#include "doctest.h"
#include "eval_fixtures.hpp"

using namespace clearing;

namespace {

RocCurve hand_curve() {
    RocCurve c;
    c.points = {{0, 0, INFINITY}, {0.2, 0.8, 0.5}, {1, 1, -INFINITY}};
    return c;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

GroundTruthSet perfect_gt() {
    GroundTruthSet gt;
    gt.add_frame(0, {{0, 0, 10, 10}});
    gt.add_frame(1, {{5, 5, 20, 20}, {30, 30, 40, 40}});
    gt.add_frame(2, {});
    gt.add_frame(3, {});
    return gt;
}

}  // namespace

TEST_CASE("match examples") {
    const BBox g{0, 0, 10, 10};
    std::vector<BBox> gts{g};
    auto same = match_detections(std::vector<Detection>{{0, g, 0.8, {}}}, gts);
    CHECK(same.true_positives == 1);
    CHECK(same.false_positives == 0);
    CHECK(same.false_negatives == 0);

    auto disjoint = match_detections(std::vector<Detection>{{0, {20, 20, 30, 30}, 0.8, {}}}, gts);
    CHECK(disjoint.true_positives == 0);
    CHECK(disjoint.false_positives == 1);
    CHECK(disjoint.false_negatives == 1);

    std::vector<Detection> two{{0, {1, 0, 10, 10}, 0.6, {}}, {0, {0, 0, 10, 10}, 0.9, {}}};
    auto greedy = match_detections(two, gts);
    CHECK(greedy.true_positives == 1);
    CHECK(greedy.false_positives == 1);
    CHECK(greedy.is_true_positive[1]);
    CHECK_FALSE(greedy.is_true_positive[0]);

    CHECK_THROWS_AS(match_detections(two, gts, 0.0), std::invalid_argument);
}

TEST_CASE("TP + FN equals ground-truth count") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 100), s(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<BBox> gts;
        std::vector<Detection> preds;
        for (int i = 0; i < static_cast<int>(rng() % 5); ++i) {
            const double x = u(rng), y = u(rng);
            gts.push_back({x, y, x + 20, y + 20});
        }
        for (int i = 0; i < static_cast<int>(rng() % 6); ++i) {
            const double x = u(rng), y = u(rng);
            preds.push_back({0, {x, y, x + 20, y + 20}, s(rng), {}});
        }
        auto m = match_detections(preds, gts, 0.3);
        CHECK(m.true_positives + m.false_negatives == static_cast<int>(gts.size()));
        CHECK(m.true_positives + m.false_positives == static_cast<int>(preds.size()));
    }
}

TEST_CASE("perfect detector and empty detector curves") {
    const auto gt = perfect_gt();
    std::vector<Detection> perfect;
    for (const auto& [id, boxes] : gt.frames())
        for (const auto& b : boxes) perfect.push_back({id, b, 1.0, {}});
    auto curve = roc_curve(perfect, gt);
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.points[1].fpr == 0.0);
    CHECK(curve.points[1].tpr == 1.0);
    CHECK(auroc(curve) == 1.0);
    CHECK(working_point(curve, 0.95).sensitivity == 1.0);
    CHECK(max_accuracy(curve, 0.3) == 1.0);

    auto empty = roc_curve(std::vector<Detection>{}, gt);
    REQUIRE(empty.points.size() == 2);
    CHECK(auroc(empty) == 0.5);
    auto wp = working_point(empty, 0.95);
    CHECK(wp.sensitivity == 0.0);
    CHECK(wp.unreachable);
    CHECK(max_accuracy(empty, 0.5) == 0.5);
}

TEST_CASE("undefined axes are errors") {
    GroundTruthSet no_neg;
    no_neg.add_frame(0, {{0, 0, 1, 1}});
    CHECK_THROWS_AS(roc_curve(std::vector<Detection>{}, no_neg), UndefinedRateError);
    GroundTruthSet no_pos;
    no_pos.add_frame(0, {});
    CHECK_THROWS_AS(roc_curve(std::vector<Detection>{}, no_pos), UndefinedRateError);
    CHECK_THROWS_AS(no_pos.add_frame(0, {}), std::invalid_argument);
}

TEST_CASE("hand-computed curve metrics") {
    // trapezoids: 0.2 * (0 + 0.8) / 2 + 0.8 * (0.8 + 1) / 2 = 0.08 + 0.72
    CHECK(auroc(hand_curve()) == doctest::Approx(0.80).epsilon(1e-12));
    // candidates: 0.5*0 + 0.5*1 = 0.5, 0.5*0.8 + 0.5*0.8 = 0.8, 0.5*1 + 0.5*0 = 0.5
    CHECK(max_accuracy(hand_curve(), 0.5) == doctest::Approx(0.8).epsilon(1e-12));
    auto wp = working_point(hand_curve(), 0.8);
    CHECK(wp.sensitivity == 0.8);
    CHECK(wp.threshold == 0.5);
    CHECK(working_point(hand_curve(), 0.95).unreachable);
}

TEST_CASE("label-independent scores give chance AUROC") {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> u(0, 1);
    auto s = synthetic_eval(rng, 5000, 5000, u, u);
    const double a = auroc(roc_curve(s.predictions, s.ground_truth));
    CHECK(std::abs(a - 0.5) <= 0.05);
}

TEST_CASE("dominating scores never fall below chance and max accuracy beats the majority") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> pos(0.3, 1.0), neg(0.0, 0.7);
        const int p = 20 + static_cast<int>(rng() % 200), n = 20 + static_cast<int>(rng() % 200);
        auto s = synthetic_eval(rng, p, n, pos, neg);
        auto curve = roc_curve(s.predictions, s.ground_truth);
        CHECK(auroc(curve) >= 0.5);
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].fpr >= curve.points[i - 1].fpr);
            CHECK(curve.points[i].tpr >= curve.points[i - 1].tpr);
        }
        for (double prior : {0.0, 0.1, 0.5, 0.83, 1.0}) {
            CHECK(max_accuracy(curve, prior) >= std::max(prior, 1 - prior));
        }
    }
}

TEST_CASE("working point matches the Gaussian ROC closed form") {
    // true ~ N(1.5, 1), false ~ N(0, 1), pushed through a logistic (ROC is
    // invariant to monotone score maps). At specificity s the sensitivity is
    // 1 - Phi(Phi^-1(s) - 1.5).
    std::mt19937_64 rng(77);
    std::normal_distribution<double> pos(1.5, 1.0), neg(0.0, 1.0);
    auto s = synthetic_eval(
        rng, 20000, 20000, [&](auto& r) { return logistic(pos(r)); }, [&](auto& r) { return logistic(neg(r)); });
    auto curve = roc_curve(s.predictions, s.ground_truth);
    const std::pair<double, double> cases[] = {{0.95, 1.6448536269514722}, {0.80, 0.8416212335729143}};
    for (auto [spec, z] : cases) {
        const double expected = 1.0 - normal_cdf(z - 1.5);
        CHECK(std::abs(working_point(curve, spec).sensitivity - expected) <= 0.02);
    }
    // AUROC of the binormal model: Phi(1.5 / sqrt(2))
    CHECK(std::abs(auroc(curve) - normal_cdf(1.5 / std::sqrt(2.0))) <= 0.01);
}

TEST_CASE("metrics are invariant to prediction order") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pos(0.2, 1.0), neg(0.0, 0.8);
    auto s = synthetic_eval(rng, 100, 80, pos, neg);
    // duplicate boxes with tied scores in positive frames stress tie-breaking
    for (int i = 0; i < 40; ++i) {
        auto d = s.predictions[static_cast<std::size_t>(i)];
        d.bbox.x_max += 3;
        s.predictions.push_back(d);
    }
    const auto base = roc_curve(s.predictions, s.ground_truth);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(s.predictions.begin(), s.predictions.end(), rng);
        const auto c = roc_curve(s.predictions, s.ground_truth);
        REQUIRE(c.points.size() == base.points.size());
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            CHECK(c.points[i].fpr == base.points[i].fpr);
            CHECK(c.points[i].tpr == base.points[i].tpr);
        }
        CHECK(auroc(c) == auroc(base));
        CHECK(max_accuracy(c, 0.4) == max_accuracy(base, 0.4));
    }
}

TEST_CASE("fp-per-frame curve counts every false detection") {
    const auto gt = perfect_gt();
    std::vector<Detection> preds{{0, {0, 0, 10, 10}, 0.9, {}},
                                 {0, {50, 50, 60, 60}, 0.8, {}},
                                 {2, {1, 1, 5, 5}, 0.7, {}},
                                 {2, {7, 7, 9, 9}, 0.7, {}}};
    auto alt = fp_per_frame_curve(preds, gt);
    REQUIRE(alt.size() == 4);
    CHECK(alt.back().fp_per_frame == doctest::Approx(3.0 / 4.0));
    CHECK(alt.back().tpr == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("detection logs, ground truth and reports round-trip through files") {
    const auto dir = std::filesystem::temp_directory_path() / "clearing_eval_test";
    std::filesystem::create_directories(dir);
    std::vector<LoggedDetection> log{{{3, {1, 2, 3, 4}, 0.5, 0.9}, 0.1, std::string("img")},
                                     {{4, {1, 2, 5, 6}, 0.25, {}}, 0.2, {}}};
    write_detection_log(dir / "d.jsonl", log);
    CHECK(read_detection_log(dir / "d.jsonl") == log);

    const auto gt = perfect_gt();
    write_ground_truth(dir / "g.jsonl", gt);
    CHECK(read_ground_truth(dir / "g.jsonl").frames() == gt.frames());

    auto report = evaluation_report(detections_of(log), gt, {0.5, std::nullopt, {0.95, 0.5}, true});
    CHECK(report["positive_fraction"].get<double>() == 0.5);
    CHECK(report["working_points"].size() == 2);
    CHECK(report["curve"][0]["threshold"].is_null());
    CHECK(report.contains("fp_per_frame_curve"));
    CHECK(roc_svg(roc_curve(detections_of(log), gt)).find("<polyline") != std::string::npos);
    std::filesystem::remove_all(dir);
}
