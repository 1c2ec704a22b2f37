#include <algorithm>
#include <cmath>
#include <limits>

#include "clearing/control.hpp"

namespace clearing {

namespace {

double first_exposed(const ToolProfile& profile, Interval iv) {
    if (profile.fraction_at(iv.lo) > kRetractedTolerance) return iv.lo;
    // The profile is linear between knots, so the first exposure starts at a
    // knot or at the crossing just after one.
    double prev_x = iv.lo, prev_f = profile.fraction_at(iv.lo);
    std::vector<ToolProfile::Knot> pts;
    for (const auto& k : profile.knots()) {
        if (k.x_m > iv.lo && k.x_m < iv.hi) pts.push_back(k);
    }
    pts.push_back({iv.hi, profile.fraction_at(iv.hi)});
    for (const auto& k : pts) {
        if (k.fraction > kRetractedTolerance) {
            return prev_x + (kRetractedTolerance - prev_f) / (k.fraction - prev_f) * (k.x_m - prev_x);
        }
        prev_x = k.x_m;
        prev_f = k.fraction;
    }
    return iv.hi;
}

}  // namespace

SafetyReport verify_safety(const ToolProfile& profile, std::span<const double> saplings, double v_mps,
                           const ToolParams& p, Interval run) {
    SafetyReport r;
    r.run = run;
    const double delta = p.margin(v_mps);
    for (double x_s : saplings) {
        const Interval req{x_s - delta, x_s + delta};
        const double worst = profile.max_on(req);
        if (worst > kRetractedTolerance) r.violations.push_back({x_s, req, worst, first_exposed(profile, req)});
    }
    r.cleared_length_m = profile.length_above(run, kClearingLevel);
    r.retracted_length_m = profile.length_at_or_below(run, kRetractedTolerance);
    r.ramp_length_m = std::max(0.0, run.length() - r.cleared_length_m - r.retracted_length_m);
    return r;
}

SafetyReport verify_safety(const ToolSchedule& s, std::span<const double> saplings, double v_mps,
                           const ToolParams& p, std::optional<Interval> run) {
    const auto profile = simulate_tool_state(s, p, v_mps);
    if (!run) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        if (!s.events.empty()) {
            lo = s.events.front().x_m;
            hi = profile.settled_x();
        }
        const double delta = p.margin(v_mps);
        for (double x : saplings) {
            lo = std::min(lo, x - delta);
            hi = std::max(hi, x + delta);
        }
        run = lo <= hi ? Interval{lo, hi} : Interval{0, 0};
    }
    return verify_safety(profile, saplings, v_mps, p, *run);
}

OnlineToolController::OnlineToolController(ToolParams p) : params_(p) { validate(params_); }

void OnlineToolController::add_sapling(double x_s_m) {
    if (!std::isfinite(x_s_m)) throw std::invalid_argument("sapling position is not finite");
    anonymous_.push_back(x_s_m);
}

void OnlineToolController::set_sapling(long key, double x_s_m) {
    if (!std::isfinite(x_s_m)) throw std::invalid_argument("sapling position is not finite");
    keyed_[key] = x_s_m;
}

std::vector<double> OnlineToolController::saplings() const {
    auto out = anonymous_;
    for (const auto& [key, x] : keyed_) out.push_back(x);
    return out;
}

void OnlineToolController::issue(double x, ToolCommand c, std::vector<ToolEvent>& out) {
    retracted_ = c == ToolCommand::retract;
    if (!issued_.events.empty() && issued_.events.back().x_m == x) {
        // Toggling back at the same position cancels the earlier command.
        issued_.events.pop_back();
        if (!out.empty() && out.back().x_m == x) out.pop_back();
        return;
    }
    issued_.events.push_back({x, c});
    out.push_back({x, c});
}

std::vector<ToolEvent> OnlineToolController::advance(double x_now, double x_next, double v_mps) {
    if (!(x_next >= x_now)) throw std::invalid_argument("controller cannot move backwards");
    if (!issued_.events.empty() && x_now < issued_.events.back().x_m) {
        throw std::invalid_argument("controller position is behind the last issued command");
    }
    std::vector<ToolEvent> out;
    const auto plan = plan_schedule(saplings(), v_mps, params_);
    bool want = false;
    for (const auto& iv : plan.retract_intervals()) {
        if (iv.lo <= x_now && x_now < iv.hi) want = true;
    }
    if (want != retracted_) issue(x_now, want ? ToolCommand::retract : ToolCommand::extend, out);
    for (const auto& e : plan.events) {
        if (e.x_m <= x_now || e.x_m > x_next) continue;
        if ((e.command == ToolCommand::retract) != retracted_) issue(e.x_m, e.command, out);
    }
    return out;
}

}  // namespace clearing
