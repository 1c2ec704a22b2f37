#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace clearing {

/// Tool timing and speed-dependent margin delta(v) = margin_a + margin_b * v.
struct ToolParams {
    double t_r = 1.0;
    double t_e = 1.0;
    double margin_a = 0.0;
    double margin_b = 0.0;

    double margin(double v_mps) const { return margin_a + margin_b * v_mps; }
};

void validate(const ToolParams& p);

enum class ToolCommand { retract, extend };

std::string_view to_string(ToolCommand c);
std::optional<ToolCommand> parse_tool_command(std::string_view s);

struct ToolEvent {
    double x_m = 0;
    ToolCommand command = ToolCommand::retract;
    bool operator==(const ToolEvent&) const = default;
};

struct Interval {
    double lo = 0;
    double hi = 0;
    double length() const { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

/// Alternating RETRACT/EXTEND events at strictly increasing positions.
struct ToolSchedule {
    std::vector<ToolEvent> events;

    /// [RETRACT, EXTEND] pairs; an unmatched final RETRACT pairs with +inf.
    std::vector<Interval> retract_intervals() const;
};

/// Throws InvalidScheduleError on non-increasing positions or broken alternation.
void validate(const ToolSchedule& s);

/// Raw interval [x_s - t_r v - delta, x_s + delta] for one sapling.
Interval required_interval(double x_s, double v_mps, const ToolParams& p);

/// Union of closed intervals; touching intervals merge.
std::vector<Interval> merge_intervals(std::vector<Interval> intervals);

ToolSchedule plan_schedule(std::span<const double> saplings, double v_mps, const ToolParams& p);

/// Speed as a step function of position: speed steps[i].v applies from
/// steps[i].x_m up to the next step. Positions before the first step use the
/// first speed.
struct SpeedStep {
    double x_m = 0;
    double v_mps = 0;
};

/// Piecewise-linear tool extension fraction over x (1 = fully extended).
class ToolProfile {
public:
    struct Knot {
        double x_m;
        double fraction;
    };

    explicit ToolProfile(std::vector<Knot> knots);

    double fraction_at(double x_m) const;
    double max_on(Interval iv) const;
    /// Measure of {x in iv : fraction(x) > level}.
    double length_above(Interval iv, double level) const;
    /// Measure of {x in iv : fraction(x) <= level}.
    double length_at_or_below(Interval iv, double level) const;
    /// x where the profile last settles (fraction constant afterwards).
    double settled_x() const;

    const std::vector<Knot>& knots() const { return knots_; }

private:
    std::vector<Knot> knots_;
};

/// Physical tool response under constant speed. Ramps are linear in time at
/// 1/t_r (retracting) and 1/t_e (extending) fractions per second and start
/// from the current fraction when a command interrupts a ramp.
ToolProfile simulate_tool_state(const ToolSchedule& s, const ToolParams& p, double v_mps);
ToolProfile simulate_tool_state(const ToolSchedule& s, const ToolParams& p, std::span<const SpeedStep> speed);

/// Fractions at or below this count as fully retracted.
inline constexpr double kRetractedTolerance = 1e-9;
/// Fractions above this count as cutting.
inline constexpr double kClearingLevel = 0.999;

struct SafetyViolation {
    double x_s_m = 0;
    Interval required;
    double max_fraction = 0;
    /// First exposed position inside the required interval.
    double first_exposed_x_m = 0;
};

struct SafetyReport {
    std::vector<SafetyViolation> violations;
    Interval run;
    double cleared_length_m = 0;
    double retracted_length_m = 0;
    double ramp_length_m = 0;

    bool safe() const { return violations.empty(); }
};

/// Checks that the tool is fully retracted on [x_s - delta, x_s + delta] for
/// every sapling and measures cleared/retracted/ramp length over the run.
/// The default run spans every event, sapling interval and settling point.
SafetyReport verify_safety(const ToolSchedule& s, std::span<const double> saplings, double v_mps,
                           const ToolParams& p, std::optional<Interval> run = {});
SafetyReport verify_safety(const ToolProfile& profile, std::span<const double> saplings, double v_mps,
                           const ToolParams& p, Interval run);

/// Sequential replanner: each update replans from every known sapling at the
/// current speed and issues the commands falling in (x_prev, x_next]. A
/// command whose position has already passed is issued immediately.
class OnlineToolController {
public:
    explicit OnlineToolController(ToolParams p);

    void add_sapling(double x_s_m);
    /// Adds or moves the sapling registered under `key`.
    void set_sapling(long key, double x_s_m);
    /// Advance from the current position to x_next at speed v; returns the
    /// commands issued along the way.
    std::vector<ToolEvent> advance(double x_now, double x_next, double v_mps);

    const ToolSchedule& issued() const { return issued_; }
    std::vector<double> saplings() const;
    bool retracted() const { return retracted_; }

private:
    void issue(double x, ToolCommand c, std::vector<ToolEvent>& out);

    ToolParams params_;
    std::vector<double> anonymous_;
    std::map<long, double> keyed_;
    ToolSchedule issued_;
    bool retracted_ = false;
};

nlohmann::json to_json(const ToolSchedule& s);
ToolSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SafetyReport& r);
nlohmann::json to_json(const ToolParams& p);
ToolParams tool_params_from_json(const nlohmann::json& j);

}  // namespace clearing
