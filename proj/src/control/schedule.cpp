#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "clearing/control.hpp"
#include "clearing/errors.hpp"

namespace clearing {

void validate(const ToolParams& p) {
    if (!(p.t_r > 0) || !std::isfinite(p.t_r)) throw std::invalid_argument("t_r must be > 0");
    if (!(p.t_e > 0) || !std::isfinite(p.t_e)) throw std::invalid_argument("t_e must be > 0");
    if (!(p.margin_a >= 0) || !(p.margin_b >= 0) || !std::isfinite(p.margin_a) || !std::isfinite(p.margin_b)) {
        throw std::invalid_argument("margin coefficients must be finite and >= 0");
    }
}

std::string_view to_string(ToolCommand c) { return c == ToolCommand::retract ? "RETRACT" : "EXTEND"; }

std::optional<ToolCommand> parse_tool_command(std::string_view s) {
    if (s == "RETRACT") return ToolCommand::retract;
    if (s == "EXTEND") return ToolCommand::extend;
    return std::nullopt;
}

std::vector<Interval> ToolSchedule::retract_intervals() const {
    std::vector<Interval> out;
    for (std::size_t i = 0; i < events.size(); i += 2) {
        const double hi = i + 1 < events.size() ? events[i + 1].x_m : std::numeric_limits<double>::infinity();
        out.push_back({events[i].x_m, hi});
    }
    return out;
}

void validate(const ToolSchedule& s) {
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const auto& e = s.events[i];
        if (!std::isfinite(e.x_m)) throw InvalidScheduleError("event position is not finite");
        const auto expected = i % 2 == 0 ? ToolCommand::retract : ToolCommand::extend;
        if (e.command != expected) {
            throw InvalidScheduleError("event " + std::to_string(i) + " should be " + std::string(to_string(expected)));
        }
        if (i > 0 && !(e.x_m > s.events[i - 1].x_m)) {
            throw InvalidScheduleError("event positions must be strictly increasing at event " + std::to_string(i));
        }
    }
}

Interval required_interval(double x_s, double v_mps, const ToolParams& p) {
    const double delta = p.margin(v_mps);
    return {(x_s - p.t_r * v_mps) - delta, x_s + delta};
}

std::vector<Interval> merge_intervals(std::vector<Interval> intervals) {
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
    std::vector<Interval> out;
    for (const auto& iv : intervals) {
        if (!out.empty() && iv.lo <= out.back().hi) {
            out.back().hi = std::max(out.back().hi, iv.hi);
        } else {
            out.push_back(iv);
        }
    }
    return out;
}

ToolSchedule plan_schedule(std::span<const double> saplings, double v_mps, const ToolParams& p) {
    validate(p);
    if (!(v_mps > 0) || !std::isfinite(v_mps)) throw std::invalid_argument("speed must be > 0");
    std::vector<Interval> raw;
    raw.reserve(saplings.size());
    for (double x : saplings) {
        if (!std::isfinite(x)) throw std::invalid_argument("sapling position is not finite");
        raw.push_back(required_interval(x, v_mps, p));
    }
    ToolSchedule s;
    for (const auto& iv : merge_intervals(std::move(raw))) {
        s.events.push_back({iv.lo, ToolCommand::retract});
        s.events.push_back({iv.hi, ToolCommand::extend});
    }
    return s;
}

}  // namespace clearing
