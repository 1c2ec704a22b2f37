#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "clearing/control.hpp"
#include "clearing/errors.hpp"

namespace clearing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class SpeedLookup {
public:
    explicit SpeedLookup(std::span<const SpeedStep> steps) : steps_(steps.begin(), steps.end()) {
        if (steps_.empty()) throw std::invalid_argument("speed profile is empty");
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            if (!(steps_[i].v_mps > 0) || !std::isfinite(steps_[i].v_mps)) {
                throw std::invalid_argument("speed must be > 0");
            }
            if (i > 0 && !(steps_[i].x_m > steps_[i - 1].x_m)) {
                throw std::invalid_argument("speed steps must have increasing positions");
            }
        }
    }

    double speed_at(double x) const {
        auto it = std::upper_bound(steps_.begin(), steps_.end(), x,
                                   [](double v, const SpeedStep& s) { return v < s.x_m; });
        return it == steps_.begin() ? steps_.front().v_mps : std::prev(it)->v_mps;
    }

    double next_break(double x) const {
        auto it = std::upper_bound(steps_.begin(), steps_.end(), x,
                                   [](double v, const SpeedStep& s) { return v < s.x_m; });
        return it == steps_.end() ? kInf : it->x_m;
    }

private:
    std::vector<SpeedStep> steps_;
};

}  // namespace

ToolProfile::ToolProfile(std::vector<Knot> knots) : knots_(std::move(knots)) {
    if (knots_.empty()) throw std::invalid_argument("tool profile needs at least one knot");
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (knots_[i].x_m < knots_[i - 1].x_m) throw std::invalid_argument("tool profile knots out of order");
    }
}

double ToolProfile::fraction_at(double x) const {
    if (x <= knots_.front().x_m) return knots_.front().fraction;
    if (x >= knots_.back().x_m) return knots_.back().fraction;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x, [](double v, const Knot& k) { return v < k.x_m; });
    const auto& b = *it;
    const auto& a = *std::prev(it);
    if (b.x_m == a.x_m) return b.fraction;
    return a.fraction + (b.fraction - a.fraction) * (x - a.x_m) / (b.x_m - a.x_m);
}

namespace {

// Breakpoints of the profile restricted to [lo, hi] with their values.
std::vector<ToolProfile::Knot> restrict(const ToolProfile& p, Interval iv) {
    std::vector<ToolProfile::Knot> pts{{iv.lo, p.fraction_at(iv.lo)}};
    for (const auto& k : p.knots()) {
        if (k.x_m > iv.lo && k.x_m < iv.hi) pts.push_back(k);
    }
    pts.push_back({iv.hi, p.fraction_at(iv.hi)});
    return pts;
}

}  // namespace

double ToolProfile::max_on(Interval iv) const {
    double m = 0;
    for (const auto& k : restrict(*this, iv)) m = std::max(m, k.fraction);
    return m;
}

double ToolProfile::length_above(Interval iv, double level) const {
    if (!(iv.hi > iv.lo)) return 0;
    const auto pts = restrict(*this, iv);
    double total = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto& a = pts[i - 1];
        const auto& b = pts[i];
        const bool above_a = a.fraction > level, above_b = b.fraction > level;
        if (above_a && above_b) {
            total += b.x_m - a.x_m;
        } else if (above_a != above_b) {
            const double t = a.x_m + (level - a.fraction) / (b.fraction - a.fraction) * (b.x_m - a.x_m);
            total += above_a ? t - a.x_m : b.x_m - t;
        }
    }
    return total;
}

double ToolProfile::length_at_or_below(Interval iv, double level) const {
    if (!(iv.hi > iv.lo)) return 0;
    return iv.length() - length_above(iv, level);
}

double ToolProfile::settled_x() const { return knots_.back().x_m; }

ToolProfile simulate_tool_state(const ToolSchedule& s, const ToolParams& p, double v_mps) {
    const SpeedStep step{0, v_mps};
    return simulate_tool_state(s, p, std::span<const SpeedStep>(&step, 1));
}

ToolProfile simulate_tool_state(const ToolSchedule& s, const ToolParams& p, std::span<const SpeedStep> speed) {
    validate(p);
    validate(s);
    const SpeedLookup lookup(speed);
    std::vector<ToolProfile::Knot> knots;
    if (s.events.empty()) return ToolProfile({{0, 1.0}});

    double x = s.events.front().x_m;
    double f = 1.0;
    knots.push_back({x, f});
    auto push = [&](double kx, double kf) {
        if (knots.back().x_m == kx && knots.back().fraction == kf) return;
        knots.push_back({kx, kf});
    };

    // Ramp from (x, f) toward `target` with a full-stroke time of `stroke_s`,
    // stopping at x_end or when the target is reached.
    auto ramp = [&](double target, double stroke_s, double x_end) {
        while (x < x_end && f != target) {
            const double v = lookup.speed_at(x);
            const double seg_end = std::min(x_end, lookup.next_break(x));
            const double need_m = std::abs(target - f) * stroke_s * v;
            if (x + need_m <= seg_end) {
                x += need_m;
                f = target;
            } else {
                const double moved = (seg_end - x) / (stroke_s * v);
                f = target < f ? std::max(target, f - moved) : std::min(target, f + moved);
                x = seg_end;
            }
            push(x, f);
        }
        if (std::isfinite(x_end) && x < x_end) x = x_end;
    };

    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const auto& e = s.events[i];
        x = e.x_m;
        push(x, f);
        const double next = i + 1 < s.events.size() ? s.events[i + 1].x_m : kInf;
        if (e.command == ToolCommand::retract) {
            ramp(0.0, p.t_r, next);
        } else {
            ramp(1.0, p.t_e, next);
        }
    }
    return ToolProfile(std::move(knots));
}

}  // namespace clearing
