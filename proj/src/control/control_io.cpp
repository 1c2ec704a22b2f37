#include <stdexcept>

#include "clearing/control.hpp"
#include "clearing/errors.hpp"

namespace clearing {

nlohmann::json to_json(const ToolSchedule& s) {
    auto j = nlohmann::json::array();
    for (const auto& e : s.events) j.push_back({{"x_m", e.x_m}, {"command", to_string(e.command)}});
    return j;
}

ToolSchedule schedule_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw FormatError("schedule must be a JSON array");
    ToolSchedule s;
    for (const auto& e : j) {
        const auto cmd = parse_tool_command(e.at("command").get<std::string>());
        if (!cmd) throw FormatError("unknown tool command " + e.at("command").dump());
        s.events.push_back({e.at("x_m").get<double>(), *cmd});
    }
    validate(s);
    return s;
}

nlohmann::json to_json(const SafetyReport& r) {
    auto violations = nlohmann::json::array();
    for (const auto& v : r.violations) {
        violations.push_back({{"x_s_m", v.x_s_m},
                              {"required", {v.required.lo, v.required.hi}},
                              {"max_fraction", v.max_fraction},
                              {"first_exposed_x_m", v.first_exposed_x_m}});
    }
    return {{"safe", r.safe()},
            {"violations", violations},
            {"run", {r.run.lo, r.run.hi}},
            {"cleared_length_m", r.cleared_length_m},
            {"retracted_length_m", r.retracted_length_m},
            {"ramp_length_m", r.ramp_length_m}};
}

nlohmann::json to_json(const ToolParams& p) {
    return {{"t_r", p.t_r}, {"t_e", p.t_e}, {"margin_a", p.margin_a}, {"margin_b", p.margin_b}};
}

ToolParams tool_params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("tool parameters must be a JSON object");
    ToolParams p;
    for (const auto& [key, value] : j.items()) {
        if (key == "t_r") p.t_r = value.get<double>();
        else if (key == "t_e") p.t_e = value.get<double>();
        else if (key == "margin_a") p.margin_a = value.get<double>();
        else if (key == "margin_b") p.margin_b = value.get<double>();
        else throw FormatError("unknown tool parameter '" + key + "'");
    }
    validate(p);
    return p;
}

}  // namespace clearing
