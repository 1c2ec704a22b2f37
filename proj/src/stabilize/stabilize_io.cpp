#include <algorithm>
#include "clearing/errors.hpp"
#include "clearing/stabilize.hpp"

namespace clearing {

using nlohmann::json;

json to_json(const CameraModel& cam) {
    return {{"height_m", cam.height_m}, {"tilt_rad", cam.tilt_rad},       {"fx", cam.fx},
            {"fy", cam.fy},             {"cx", cam.cx},                   {"cy", cam.cy},
            {"image_width", cam.image_width}, {"image_height", cam.image_height}};
}

CameraModel camera_from_json(const json& j) {
    static const std::vector<std::string> keys{"height_m", "tilt_rad", "fx", "fy", "cx", "cy", "image_width", "image_height"};
    for (const auto& [k, v] : j.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw FormatError("unknown camera key '" + k + "'");
    }
    CameraModel cam;
    cam.height_m = j.value("height_m", cam.height_m);
    cam.tilt_rad = j.value("tilt_rad", cam.tilt_rad);
    cam.fx = j.value("fx", cam.fx);
    cam.fy = j.value("fy", cam.fy);
    cam.cx = j.value("cx", cam.cx);
    cam.cy = j.value("cy", cam.cy);
    cam.image_width = j.value("image_width", cam.image_width);
    cam.image_height = j.value("image_height", cam.image_height);
    validate(cam);
    return cam;
}

json to_json(const ValidatedSapling& s) {
    return {{"x_s_m", s.x_s_m}, {"frame_id", s.frame_id}, {"track_id", s.track_id}};
}

ValidatedSapling validated_sapling_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0, 0};
    return {j.at("x_s_m").get<double>(), j.value("frame_id", 0L), j.value("track_id", 0L)};
}

json to_json(const ReviewCandidate& c) {
    json obs = json::array();
    for (const auto& o : c.observations) {
        json entry = {{"frame_id", o.frame_id}, {"x_world_m", o.x_world_m}, {"score", o.score}};
        if (o.source) entry["detection"] = to_json(*o.source);
        obs.push_back(entry);
    }
    return {{"track_id", c.track_id},
            {"x_world_m", c.x_world_m},
            {"hits", c.hits},
            {"reason", c.reason},
            {"observations", obs}};
}

ReviewCandidate review_candidate_from_json(const json& j) {
    ReviewCandidate c;
    c.track_id = j.at("track_id").get<long>();
    c.x_world_m = j.value("x_world_m", 0.0);
    c.hits = j.value("hits", 1);
    c.reason = j.value("reason", "single-frame-detection");
    for (const auto& o : j.value("observations", json::array())) {
        TrackObservation obs;
        obs.frame_id = o.at("frame_id").get<long>();
        obs.x_world_m = o.value("x_world_m", 0.0);
        obs.score = o.value("score", 0.0);
        if (o.contains("detection")) obs.source = logged_detection_from_json(o["detection"]);
        c.observations.push_back(std::move(obs));
    }
    return c;
}

json to_json(const OdometrySample& o) { return {{"t", o.t_seconds}, {"x_m", o.x_m}, {"v_mps", o.v_mps}}; }

OdometrySample odometry_from_json(const json& j) {
    OdometrySample o{j.at("t").get<double>(), j.at("x_m").get<double>(), j.value("v_mps", 0.0)};
    if (o.v_mps < 0) throw FormatError("odometry speed must be >= 0");
    return o;
}

std::vector<OdometrySample> read_odometry(const std::filesystem::path& path) {
    std::vector<OdometrySample> out;
    for (const auto& j : read_json_lines(path)) {
        out.push_back(odometry_from_json(j));
        if (out.size() > 1 && out.back().t_seconds < out[out.size() - 2].t_seconds) {
            throw FormatError(path.string() + ": odometry timestamps must be non-decreasing");
        }
    }
    return out;
}

json to_json(const StabilizerConfig& cfg) {
    return {{"n", cfg.n},
            {"gate_m", cfg.gate_m},
            {"max_gap_frames", cfg.max_gap_frames},
            {"position_update", to_string(cfg.position_update)}};
}

StabilizerConfig stabilizer_config_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("stabilizer config must be a JSON object");
    StabilizerConfig cfg;
    for (const auto& [k, v] : j.items()) {
        if (k == "n") cfg.n = v.get<int>();
        else if (k == "gate_m") cfg.gate_m = v.get<double>();
        else if (k == "max_gap_frames") cfg.max_gap_frames = v.get<int>();
        else if (k == "position_update") {
            const auto u = parse_position_update(v.get<std::string>());
            if (!u) throw FormatError("position_update must be 'mean' or 'last'");
            cfg.position_update = *u;
        } else {
            throw FormatError("unknown stabilizer key '" + k + "'");
        }
    }
    validate(cfg);
    return cfg;
}

}  // namespace clearing
