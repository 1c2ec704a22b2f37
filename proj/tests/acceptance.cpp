// Acceptance run: one PASS/FAIL line per criterion, preceded by the
// individual checks behind it. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "clearing/control.hpp"
#include "clearing/enhance.hpp"
#include "clearing/eval.hpp"
#include "clearing/imaging.hpp"
#include "clearing/simulate.hpp"
#include "clearing/spectral.hpp"
#include "clearing/stabilize.hpp"
#include "eval_fixtures.hpp"
#include "oracles.hpp"

using namespace clearing;
using Clock = std::chrono::steady_clock;

namespace {

class Criterion {
public:
    explicit Criterion(std::string name) : name_(std::move(name)), start_(Clock::now()) {}

    void check(bool ok, const std::string& what, const std::string& detail = {}) {
        ok_ = ok_ && ok;
        std::printf("    %s  %s%s%s\n", ok ? "ok  " : "FAIL", what.c_str(), detail.empty() ? "" : "  ", detail.c_str());
    }

    bool finish() {
        const double s = std::chrono::duration<double>(Clock::now() - start_).count();
        std::printf("%s %s (%.2f s)\n", ok_ ? "PASS" : "FAIL", name_.c_str(), s);
        std::fflush(stdout);
        return ok_;
    }

private:
    std::string name_;
    Clock::time_point start_;
    bool ok_ = true;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

bool sam_correctness() {
    Criterion c("sam: analytic angles and cube classification");
    auto angle_ok = [&](std::vector<double> a, std::vector<double> b, double expected, const char* what) {
        const double got = spectral_angle(Spectrum(a), Spectrum(b));
        c.check(std::abs(got - expected) <= 1e-12, what, fmt("got %.17g want %.17g", got, expected));
    };
    angle_ok({1, 2, 3}, {1, 2, 3}, 0.0, "identical spectra give 0");
    angle_ok({1, 0}, {0, 1}, M_PI / 2, "orthogonal spectra give pi/2");
    angle_ok({1, 0}, {1, 1}, M_PI / 4, "45 degree spectra give pi/4");
    angle_ok({1, 2, 3}, {2, 4, 6}, 0.0, "scaled spectrum gives 0");

    // Per-pixel oracle: scalar loops over every reference.
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    long mismatches = 0, pixels = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 9 + trial % 5, h = 7 + trial % 3, ch = 4;
        ReferenceLibrary lib;
        std::vector<std::pair<std::string, std::vector<double>>> refs;
        for (int k = 0; k < 4; ++k) {
            std::vector<double> s(ch);
            for (auto& x : s) x = 0.05 + u(rng);
            const std::string label(1, static_cast<char>('a' + k % 3));
            lib.add(label, Spectrum(s));
            refs.emplace_back(label, s);
        }
        std::vector<double> samples(static_cast<std::size_t>(w) * h * ch);
        for (auto& x : samples) x = 0.01 + u(rng);
        const double reject = 0.25;
        const auto map = classify_cube(SpectralCube(w, h, ch, samples), lib, reject);
        for (int i = 0; i < w * h; ++i, ++pixels) {
            double best = 10;
            std::string best_label;
            for (const auto& [label, r] : refs) {
                double d = 0, na = 0, nb = 0;
                for (int k = 0; k < ch; ++k) {
                    const double p = samples[static_cast<std::size_t>(i) * ch + k];
                    d += p * r[k];
                    na += p * p;
                    nb += r[k] * r[k];
                }
                const double a = std::acos(std::clamp(d / std::sqrt(na * nb), -1.0, 1.0));
                if (a < best - 1e-9 || (std::abs(a - best) <= 1e-9 && label < best_label)) {
                    best = a;
                    best_label = label;
                }
            }
            const int idx = best <= reject
                                ? static_cast<int>(std::find(map.labels.begin(), map.labels.end(), best_label) -
                                                   map.labels.begin())
                                : LabelMap::kReject;
            mismatches += map.indices[i] != idx;
        }
    }
    c.check(mismatches == 0, "20 random cubes equal the per-pixel oracle",
            fmt("%.0f mismatches of %.0f pixels", static_cast<double>(mismatches), static_cast<double>(pixels)));
    return c.finish();
}

oracle::PixelSet to_set(const Component& comp) {
    oracle::PixelSet s;
    for (auto p : comp.pixels) s.insert({p.y, p.x});
    return s;
}

std::vector<oracle::PixelSet> sorted_sets(const std::vector<Component>& comps) {
    std::vector<oracle::PixelSet> out;
    for (const auto& comp : comps) out.push_back(to_set(comp));
    std::sort(out.begin(), out.end());
    return out;
}

bool mask_clustering() {
    Criterion c("mask clustering: flood-fill equality and threshold nesting");
    std::mt19937_64 rng(20240611);
    int unequal = 0, broken_nesting = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto values = oracle::random_mask_values(rng, 64, 64);
        const FuzzyMask m(64, 64, values);
        for (int conn : {4, 8}) {
            const auto cc = conn == 4 ? Connectivity::four : Connectivity::eight;
            unequal += sorted_sets(threshold_components(m, 0.5, 2, cc)) !=
                       oracle::flood_fill_components(values, 64, 64, 0.5, conn, 2);
            const auto low = sorted_sets(threshold_components(m, 0.3, 1, cc));
            const auto high = sorted_sets(threshold_components(m, 0.6, 1, cc));
            for (const auto& hs : high) {
                int containing = 0;
                for (const auto& ls : low) containing += std::includes(ls.begin(), ls.end(), hs.begin(), hs.end());
                broken_nesting += containing != 1;
            }
        }
    }
    c.check(unequal == 0, "100 random 64x64 masks, both connectivities, equal the flood fill",
            fmt("%.0f differing", unequal));
    c.check(broken_nesting == 0, "every component at 0.6 lies in exactly one component at 0.3",
            fmt("%.0f violations", broken_nesting));
    return c.finish();
}

Gray8Image random_image(std::mt19937_64& rng, int w, int h) {
    std::uniform_int_distribution<int> level(0, 255), narrow(90, 140);
    const bool low_contrast = rng() % 2 == 0;
    Gray8Image img(w, h);
    for (auto& v : img.values()) v = static_cast<std::uint8_t>(low_contrast ? narrow(rng) : level(rng));
    return img;
}

bool clahe_criterion() {
    Criterion c("clahe: constancy, global equalization, range closure, runtime");
    bool constant = true;
    for (int level : {0, 77, 128, 255}) {
        const auto out = clahe(Gray8Image(64, 48, static_cast<std::uint8_t>(level)), {8, 8, 4.0, 256});
        for (auto v : out.image.values()) constant = constant && v == out.image.values()[0];
    }
    c.check(constant, "uniform images map to one value");

    std::mt19937_64 rng(42);
    int differing = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const auto img = random_image(rng, 37 + trial, 29);
        const auto out = clahe(img, {1, 1, 1e9, 256});
        const auto expected = oracle::global_equalization({img.values().begin(), img.values().end()});
        for (std::size_t i = 0; i < expected.size(); ++i) differing += out.image.values()[i] != expected[i];
    }
    c.check(differing == 0, "1x1 tile without clipping equals global equalization", fmt("%.0f pixels differ", differing));

    // Output pixels are uint8 by type, so closure reduces to shape and determinism.
    int bad = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto img = random_image(rng, 50 + trial, 40 + trial % 7);
        const ClaheParams p{1 + trial % 8, 1 + trial % 5, 0.5 + trial % 6, trial % 3 == 0 ? 64 : 256};
        const auto a = clahe(img, p);
        bad += a.image.width() != img.width() || a.image.height() != img.height() || !(a.image == clahe(img, p).image);
    }
    c.check(bad == 0, "50 random images keep size, range and determinism", fmt("%.0f failing", bad));

    Gray8Image frame(2048, 1536);
    std::uniform_int_distribution<int> level(0, 255);
    for (auto& v : frame.values()) v = static_cast<std::uint8_t>(level(rng));
    clahe(frame);
    double best = 1e9;
    for (int rep = 0; rep < 3; ++rep) {
        const auto t0 = Clock::now();
        clahe(frame);
        best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    c.check(best < 100.0, "2048x1536 frame under 100 ms", fmt("best of 3: %.1f ms", best));
    return c.finish();
}

bool evaluation() {
    Criterion c("evaluation: perfect, chance, majority baseline, hand curve");
    GroundTruthSet gt;
    gt.add_frame(0, {{0, 0, 10, 10}});
    gt.add_frame(1, {{5, 5, 20, 20}, {30, 30, 40, 40}});
    gt.add_frame(2, {});
    gt.add_frame(3, {});
    std::vector<Detection> perfect;
    for (const auto& [id, boxes] : gt.frames())
        for (const auto& b : boxes) perfect.push_back({id, b, 1.0, {}});
    const double a_perfect = auroc(roc_curve(perfect, gt));
    c.check(std::abs(a_perfect - 1.0) <= 1e-9, "perfect detector AUROC 1.0", fmt("auroc %.12f", a_perfect));

    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> u(0, 1);
    const auto chance = synthetic_eval(rng, 5000, 5000, u, u);
    const double a_chance = auroc(roc_curve(chance.predictions, chance.ground_truth));
    c.check(std::abs(a_chance - 0.5) <= 0.05, "label-independent scores over 10000 instances give 0.5 +/- 0.05",
            fmt("auroc %.4f", a_chance));

    int below = 0, trials = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        std::mt19937_64 r(seed);
        std::uniform_real_distribution<double> pos(0.0, 1.0), neg(0.0, 1.0);
        const int p = 10 + static_cast<int>(r() % 300), n = 10 + static_cast<int>(r() % 300);
        const auto s = synthetic_eval(r, p, n, pos, neg);
        const auto curve = roc_curve(s.predictions, s.ground_truth);
        for (double prior : {0.0, 0.1, 0.3, 0.5, 0.77, 1.0}) {
            ++trials;
            below += max_accuracy(curve, prior) < std::max(prior, 1 - prior);
        }
    }
    c.check(below == 0, "max_accuracy >= majority baseline on every random trial",
            fmt("%.0f of %.0f below", below, trials));

    RocCurve hand;
    hand.points = {{0, 0, INFINITY}, {0.2, 0.8, 0.5}, {1, 1, -INFINITY}};
    const double a_hand = auroc(hand);
    // independent trapezoid sum over the three points
    const double trapezoid = 0.2 * (0 + 0.8) / 2 + 0.8 * (0.8 + 1) / 2;
    c.check(std::abs(a_hand - trapezoid) <= 1e-12, "hand curve {(0,0),(0.2,0.8),(1,1)} equals the trapezoid sum",
            fmt("auroc %.12f, trapezoid %.12f", a_hand, trapezoid));
    c.check(std::abs(a_hand - 0.88) <= 1e-12, "hand curve {(0,0),(0.2,0.8),(1,1)} equals the stated 0.88",
            fmt("auroc %.12f, stated 0.88", a_hand));
    return c.finish();
}

std::vector<WorldDetection> at(double x) { return {{x, 0.9, std::nullopt}}; }

bool stabilization() {
    Criterion c("stabilization: presence-pattern oracle, n-monotonicity, exactly-once");
    bool exactly_once = true;
    struct Case {
        int k, n, gap;
        double p;
    };
    for (auto cs : {Case{12, 3, 1, 0.5}, Case{8, 4, 0, 0.7}, Case{10, 2, 2, 0.3}, Case{12, 5, 2, 0.6},
                    Case{12, 1, 0, 0.1}, Case{12, 12, 0, 0.9}, Case{6, 3, 3, 0.4}}) {
        std::mt19937_64 rng(1000 + cs.k * 7 + cs.n);
        std::bernoulli_distribution present(cs.p);
        const int trials = 100000;
        int validated = 0;
        for (int t = 0; t < trials; ++t) {
            Stabilizer stab({cs.n, 0.3, cs.gap, PositionUpdate::mean});
            for (int f = 0; f < cs.k; ++f) stab.step(f, present(rng) ? at(3.0) : std::vector<WorldDetection>{});
            std::set<long> ids;
            for (const auto& v : stab.validated()) exactly_once = exactly_once && ids.insert(v.track_id).second;
            validated += !stab.validated().empty();
        }
        const double rate = static_cast<double>(validated) / trials;
        const double expected = oracle::exhaustive_validation_probability(cs.k, cs.n, cs.gap, cs.p);
        char what[96];
        std::snprintf(what, sizeof what, "k=%d n=%d gap=%d p=%.1f over 1e5 trials within 0.02", cs.k, cs.n, cs.gap,
                      cs.p);
        c.check(std::abs(rate - expected) <= 0.02, what, fmt("rate %.4f exact %.4f", rate, expected));
    }

    int not_nested = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, 0.05);
        std::uniform_real_distribution<double> fp(0.0, 20.0);
        std::bernoulli_distribution seen(0.6);
        std::vector<std::vector<WorldDetection>> stream;
        for (int f = 0; f < 60; ++f) {
            std::vector<WorldDetection> dets;
            for (double s = 1.0; s < 20.0; s += 1.3)
                if (seen(rng)) dets.push_back({s + noise(rng), 0.8, {}});
            if (rng() % 2) dets.push_back({fp(rng), 0.4, {}});
            stream.push_back(std::move(dets));
        }
        std::set<long> previous;
        for (int n = 1; n <= 6; ++n) {
            Stabilizer stab({n, 0.3, 2, PositionUpdate::mean});
            for (std::size_t f = 0; f < stream.size(); ++f) stab.step(static_cast<long>(f), stream[f]);
            stab.finish();
            std::set<long> ids;
            for (const auto& v : stab.validated()) exactly_once = exactly_once && ids.insert(v.track_id).second;
            if (n > 1) not_nested += !std::includes(previous.begin(), previous.end(), ids.begin(), ids.end());
            previous = std::move(ids);
        }
    }
    c.check(not_nested == 0, "validated set at n+1 is a subset of n on 50 paired streams",
            fmt("%.0f of %.0f steps not nested", not_nested, 250));
    c.check(exactly_once, "no track validated more than once on any run");
    return c.finish();
}

std::vector<std::pair<double, double>> pairs_of(const std::vector<Interval>& ivs) {
    std::vector<std::pair<double, double>> out;
    for (const auto& iv : ivs) out.emplace_back(iv.lo, iv.hi);
    return out;
}

bool control() {
    Criterion c("control: substitution example, safety, interval union");
    const std::vector<double> one{10.0};
    const ToolParams example{2.0, 1.0, 0.5, 0.1};
    const auto s = plan_schedule(one, 1.0, example);
    const bool exact = s.events.size() == 2 && s.events[0] == ToolEvent{7.4, ToolCommand::retract} &&
                       s.events[1] == ToolEvent{10.6, ToolCommand::extend};
    c.check(exact, "x_s=10, v=1, t_r=2, delta=0.6 gives RETRACT 7.4 / EXTEND 10.6 exactly",
            s.events.size() == 2 ? fmt("%.17g / %.17g", s.events[0].x_m, s.events[1].x_m) : "wrong event count");

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pos(0, 50), v(0.1, 3.0), tr(0.05, 2.0), te(0.05, 2.0), a(0, 0.5),
        b(0, 0.3), probe(-5, 55);
    std::uniform_int_distribution<int> count(0, 30);
    long violations = 0;
    int unequal = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const ToolParams p{tr(rng), te(rng), a(rng), b(rng)};
        const double speed = v(rng);
        std::vector<double> saplings(count(rng));
        for (auto& x : saplings) x = pos(rng);
        const auto sched = plan_schedule(saplings, speed, p);
        violations += static_cast<long>(verify_safety(sched, saplings, speed, p).violations.size());
        std::vector<Interval> raw;
        for (double x : saplings) raw.push_back(required_interval(x, speed, p));
        const auto raw_pairs = pairs_of(raw);
        const auto got = pairs_of(sched.retract_intervals());
        auto both = raw_pairs;
        both.insert(both.end(), got.begin(), got.end());
        const double l_raw = oracle::union_length(raw_pairs);
        bool same = std::abs(oracle::union_length(got) - l_raw) <= 1e-9 &&
                    std::abs(oracle::union_length(both) - l_raw) <= 1e-9;
        for (int k = 0; k < 50; ++k) {
            const double x = probe(rng);
            same = same && oracle::in_union(raw_pairs, x) == oracle::in_union(got, x);
        }
        unequal += !same;
    }
    c.check(violations == 0, "plan_schedule is violation-free on 1000 random scenarios",
            fmt("%.0f violations", static_cast<double>(violations)));
    c.check(unequal == 0, "merged intervals equal the interval-union oracle", fmt("%.0f scenarios differ", unequal));
    return c.finish();
}

bool end_to_end_criterion() {
    Criterion c("end-to-end: perfect-detector protection and clearing, stricter n reduces false retraction");
    int unprotected = 0, runs = 0;
    double worst = 0;
    for (int n : {1, 3, 10}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed, ++runs) {
            FieldScenario s;
            s.seed = seed;
            s.detector.tp_prob = 1.0;
            s.detector.fp_per_frame = 0.0;
            s.detector.pos_noise_m = 0.0;
            s.stabilizer.n = n;
            const auto run = simulate_run(s);
            const auto& r = run.report;
            unprotected += (r.saplings_total - r.saplings_protected) + r.safety_violations;
            const double v = s.speed_profile.front().v_mps;
            const double expected = oracle::analytic_cleared_fraction(run.field.saplings, v, s.tool.t_r, s.tool.t_e,
                                                                      s.tool.margin(v), s.line_length_m);
            worst = std::max(worst, std::abs(r.weeds_cleared_fraction - expected));
        }
    }
    c.check(unprotected == 0, "perfect detector protects every sapling (n = 1, 3, 10; 10 seeds each)",
            fmt("%.0f unprotected over %.0f runs", unprotected, runs));
    c.check(worst <= 1e-9, "weed-clearing fraction matches the closed form within 1e-9", fmt("max error %.3g", worst));

    int strictly_lower = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        FieldScenario s;
        s.seed = seed;
        s.detector.fp_per_frame = 0.5;
        s.stabilizer.n = 1;
        const double loose = end_to_end(s).false_retraction_length_m;
        s.stabilizer.n = 4;
        strictly_lower += end_to_end(s).false_retraction_length_m < loose;
    }
    c.check(strictly_lower >= 45, "n=4 retracts strictly less than n=1 on >= 45 of 50 paired seeds (fp 0.5)",
            fmt("%.0f of 50", strictly_lower));
    return c.finish();
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    int failed = 0;
    for (auto criterion : {sam_correctness, mask_clustering, clahe_criterion, evaluation, stabilization, control,
                           end_to_end_criterion}) {
        failed += !criterion();
    }
    const double minutes = std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
    std::printf("%s runtime: acceptance run under 5 minutes (%.2f min)\n", minutes < 5.0 ? "PASS" : "FAIL", minutes);
    failed += minutes >= 5.0;
    std::printf("%d criteria failed\n", failed);
    return failed;
}
