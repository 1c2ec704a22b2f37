#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "clearing/simulate.hpp"

namespace clearing {

namespace {

double speed_at_position(const std::vector<SpeedStep>& steps, double x) {
    double v = steps.front().v_mps;
    for (const auto& s : steps) {
        if (s.x_m <= x) v = s.v_mps;
    }
    return v;
}

// One-to-one closest-first matching of validated positions to true saplings.
std::vector<int> match_validated(const std::vector<ValidatedSapling>& validated, const std::vector<double>& truth,
                                 double gate) {
    struct Pair {
        double d;
        std::size_t v, t;
    };
    std::vector<Pair> pairs;
    for (std::size_t v = 0; v < validated.size(); ++v) {
        for (std::size_t t = 0; t < truth.size(); ++t) {
            const double d = std::abs(validated[v].x_s_m - truth[t]);
            if (d <= gate) pairs.push_back({d, v, t});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return std::tie(a.d, a.t, a.v) < std::tie(b.d, b.t, b.v);
    });
    std::vector<int> truth_to_validated(truth.size(), -1);
    std::vector<bool> used(validated.size(), false);
    for (const auto& p : pairs) {
        if (used[p.v] || truth_to_validated[p.t] >= 0) continue;
        used[p.v] = true;
        truth_to_validated[p.t] = static_cast<int>(p.v);
    }
    return truth_to_validated;
}

}  // namespace

SimRun simulate_run(const FieldScenario& s) {
    validate(s);
    SimRun run;
    run.field = generate_field(s);
    run.detections = run_detector(run.field, s);
    const auto& det = run.detections;
    const long frames = static_cast<long>(det.odometry.size());

    std::vector<std::vector<WorldDetection>> per_frame(frames);
    for (const auto& d : det.log) {
        const auto& odo = det.odometry[d.detection.frame_id];
        per_frame[d.detection.frame_id].push_back({project_detection(d.detection, det.camera, odo), d.detection.score, d});
    }

    auto& report = run.report;
    report.seed = s.seed;
    report.frames = static_cast<int>(frames);
    Stabilizer stab(s.stabilizer);
    OnlineToolController controller(s.tool);
    for (long k = 0; k < frames; ++k) {
        const auto& odo = det.odometry[k];
        for (const auto& v : stab.step(k, per_frame[k])) {
            report.events.push_back({k, odo.t_seconds, odo.x_m, "validated", v.x_s_m});
        }
        // validated tracks keep refining their estimate while still in view
        for (const auto& t : stab.live_tracks()) {
            if (t.validated) controller.set_sapling(t.id, t.x_world_m);
        }
        const double x_next = k + 1 < frames ? det.odometry[k + 1].x_m : std::numeric_limits<double>::infinity();
        for (const auto& e : controller.advance(odo.x_m, x_next, odo.v_mps)) {
            report.events.push_back({k, odo.t_seconds, odo.x_m, std::string(to_string(e.command)), e.x_m});
        }
    }
    stab.finish();
    run.stabilized = {stab.validated(), stab.review_candidates(), stab.expired_tracks()};
    report.schedule = controller.issued();

    const auto speed = det.trajectory.speed_by_position();
    run.profile = simulate_tool_state(report.schedule, s.tool, speed);
    const auto& profile = run.profile;
    const auto& truth = run.field.saplings;

    const auto matched = match_validated(stab.validated(), truth, s.stabilizer.gate_m);
    report.saplings_total = static_cast<int>(truth.size());
    std::vector<Interval> needed;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double v = speed_at_position(speed, truth[i]);
        const double r = s.sapling_radius_m;
        const bool exposed = profile.max_on({truth[i] - r, truth[i] + r}) > kRetractedTolerance;
        const bool validated = matched[i] >= 0;
        report.saplings_validated += validated;
        if (validated && !exposed) {
            ++report.saplings_protected;
        } else {
            report.unprotected_saplings.push_back(truth[i]);
        }
        const auto req = required_interval(truth[i], v, s.tool);
        needed.push_back({req.lo, req.hi + s.tool.t_e * v});
    }
    for (double x : controller.saplings()) {
        const double delta = s.tool.margin(speed_at_position(speed, x));
        report.safety_violations += profile.max_on({x - delta, x + delta}) > kRetractedTolerance;
    }
    report.false_validations = static_cast<int>(stab.validated().size()) - report.saplings_validated;

    const Interval line{0, s.line_length_m};
    const double cleared = profile.length_above(line, kClearingLevel);
    report.weeds_cleared_fraction = cleared / line.length();
    report.weeds_total = static_cast<int>(run.field.weeds.size());
    for (double w : run.field.weeds) report.weeds_cut += profile.fraction_at(w) > kClearingLevel;

    double uncut_needed = 0;
    for (const auto& iv : merge_intervals(needed)) {
        const Interval clipped{std::max(iv.lo, line.lo), std::min(iv.hi, line.hi)};
        if (clipped.hi > clipped.lo) uncut_needed += clipped.length() - profile.length_above(clipped, kClearingLevel);
    }
    report.false_retraction_length_m = std::max(0.0, (line.length() - cleared) - uncut_needed);
    return run;
}

SimReport end_to_end(const FieldScenario& s) { return simulate_run(s).report; }

}  // namespace clearing
