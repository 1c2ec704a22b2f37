#include <fstream>
#include <functional>
#include <map>

#include "clearing/errors.hpp"
#include "clearing/pnm.hpp"
#include "clearing/simulate.hpp"

namespace clearing {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

void apply(const json& j, const std::string& where, const std::map<std::string, Setter>& setters) {
    if (!j.is_object()) throw FormatError(where + " must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        auto it = setters.find(k);
        if (it == setters.end()) throw FormatError("unknown key '" + k + "' in " + where);
        try {
            it->second(v);
        } catch (const json::exception& e) {
            throw FormatError("bad value for '" + k + "' in " + where + ": " + e.what());
        }
    }
}

template <typename T>
Setter set(T& field) {
    return [&field](const json& v) { field = v.get<T>(); };
}

Setter set_range(ScoreRange& r) {
    return [&r](const json& v) {
        if (!v.is_array() || v.size() != 2) throw FormatError("score range must be [lo, hi]");
        r = {v[0].get<double>(), v[1].get<double>()};
    };
}

json segment_json(const SpeedSegment& s) {
    json j{{"v_mps", s.v_mps}};
    if (std::isfinite(s.duration_s)) j["duration_s"] = s.duration_s;
    return j;
}

}  // namespace

FieldScenario scenario_from_json(const json& j) {
    FieldScenario s;
    auto& d = s.detector;
    const std::map<std::string, Setter> detector{
        {"tp_prob", set(d.tp_prob)},
        {"fp_per_frame", set(d.fp_per_frame)},
        {"pos_noise_m", set(d.pos_noise_m)},
        {"true_score", set_range(d.true_score)},
        {"false_score", set_range(d.false_score)},
    };
    const std::map<std::string, Setter> top{
        {"seed", set(s.seed)},
        {"line_length_m", set(s.line_length_m)},
        {"sapling_spacing_mean_m", set(s.sapling_spacing_mean_m)},
        {"spacing_jitter_m", set(s.spacing_jitter_m)},
        {"skip_probability", set(s.skip_probability)},
        {"weed_density_per_m", set(s.weed_density_per_m)},
        {"sapling_radius_m", set(s.sapling_radius_m)},
        {"fps", set(s.fps)},
        {"view_offset_m", set(s.view_offset_m)},
        {"view_window_m", set(s.view_window_m)},
        {"camera_height_m", set(s.camera_height_m)},
        {"image_width", set(s.image_width)},
        {"image_height", set(s.image_height)},
        {"detector", [&](const json& v) { apply(v, "detector", detector); }},
        {"stabilizer", [&](const json& v) { s.stabilizer = stabilizer_config_from_json(v); }},
        {"tool", [&](const json& v) { s.tool = tool_params_from_json(v); }},
        {"speed_profile",
         [&](const json& v) {
             if (!v.is_array() || v.empty()) throw FormatError("speed_profile must be a non-empty array");
             s.speed_profile.clear();
             for (const auto& seg : v) {
                 SpeedSegment out;
                 apply(seg, "speed_profile segment", {{"duration_s", set(out.duration_s)}, {"v_mps", set(out.v_mps)}});
                 s.speed_profile.push_back(out);
             }
         }},
    };
    apply(j, "scenario", top);
    try {
        validate(s);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("invalid scenario: ") + e.what());
    }
    return s;
}

FieldScenario read_scenario(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

json to_json(const FieldScenario& s) {
    json speed = json::array();
    for (const auto& seg : s.speed_profile) speed.push_back(segment_json(seg));
    const auto& d = s.detector;
    return {{"seed", s.seed},
            {"line_length_m", s.line_length_m},
            {"sapling_spacing_mean_m", s.sapling_spacing_mean_m},
            {"spacing_jitter_m", s.spacing_jitter_m},
            {"skip_probability", s.skip_probability},
            {"weed_density_per_m", s.weed_density_per_m},
            {"sapling_radius_m", s.sapling_radius_m},
            {"fps", s.fps},
            {"speed_profile", speed},
            {"view_offset_m", s.view_offset_m},
            {"view_window_m", s.view_window_m},
            {"camera_height_m", s.camera_height_m},
            {"image_width", s.image_width},
            {"image_height", s.image_height},
            {"detector",
             {{"tp_prob", d.tp_prob},
              {"fp_per_frame", d.fp_per_frame},
              {"pos_noise_m", d.pos_noise_m},
              {"true_score", {d.true_score.lo, d.true_score.hi}},
              {"false_score", {d.false_score.lo, d.false_score.hi}}}},
            {"stabilizer", to_json(s.stabilizer)},
            {"tool", to_json(s.tool)}};
}

json to_json(const SimReport& r, bool include_events) {
    json j{{"seed", r.seed},
           {"frames", r.frames},
           {"saplings_total", r.saplings_total},
           {"saplings_validated", r.saplings_validated},
           {"saplings_protected", r.saplings_protected},
           {"false_validations", r.false_validations},
           {"weeds_total", r.weeds_total},
           {"weeds_cut", r.weeds_cut},
           {"weeds_cleared_fraction", r.weeds_cleared_fraction},
           {"false_retraction_length_m", r.false_retraction_length_m},
           {"safety_violations", r.safety_violations},
           {"unprotected_saplings", r.unprotected_saplings},
           {"schedule", to_json(r.schedule)}};
    if (include_events) {
        json events = json::array();
        for (const auto& e : r.events) {
            events.push_back({{"frame_id", e.frame_id},
                              {"t_seconds", e.t_seconds},
                              {"x_m", e.x_m},
                              {"kind", e.kind},
                              {"value", e.value}});
        }
        j["events"] = std::move(events);
    }
    return j;
}

void write_traces(const SimRun& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_detection_log(dir / "detections.jsonl", run.detections.log);
    write_ground_truth(dir / "ground_truth.jsonl", run.detections.ground_truth);
    std::vector<json> odo;
    for (const auto& o : run.detections.odometry) odo.push_back(to_json(o));
    write_json_lines(dir / "odometry.jsonl", odo);
    write_file_atomic(dir / "field.json",
                      json{{"saplings", run.field.saplings}, {"weeds", run.field.weeds}}.dump(2) + "\n");
    write_file_atomic(dir / "schedule.json", to_json(run.report.schedule).dump(2) + "\n");
    write_file_atomic(dir / "camera.json", to_json(run.detections.camera).dump(2) + "\n");
    std::vector<json> events = to_json(run.report, true)["events"];
    write_json_lines(dir / "events.jsonl", events);
    json review = json::array();
    for (const auto& c : run.stabilized.review) review.push_back(to_json(c));
    write_file_atomic(dir / "review.json", review.dump(2) + "\n");
}

}  // namespace clearing
