#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "clearing/control.hpp"
#include "clearing/detection_log.hpp"
#include "clearing/eval.hpp"
#include "clearing/stabilize.hpp"
#include "json.hpp"

namespace clearing {

struct ScoreRange {
    double lo = 0;
    double hi = 1;
};

struct DetectorModel {
    double tp_prob = 0.9;
    double fp_per_frame = 0.2;
    double pos_noise_m = 0.02;
    ScoreRange true_score{0.6, 1.0};
    ScoreRange false_score{0.0, 0.7};
};

/// Constant speed for duration_s seconds; the last segment may be open-ended.
struct SpeedSegment {
    double duration_s = std::numeric_limits<double>::infinity();
    double v_mps = 0.5;
};

struct FieldScenario {
    std::uint64_t seed = 0;
    double line_length_m = 30.0;
    double sapling_spacing_mean_m = 1.5;
    /// Spacing draws are uniform in mean +/- jitter.
    double spacing_jitter_m = 0.3;
    double skip_probability = 0.1;
    double weed_density_per_m = 4.0;
    /// Half-width of the stem and crown that must not be cut.
    double sapling_radius_m = 0.05;
    double fps = 10.0;
    std::vector<SpeedSegment> speed_profile{SpeedSegment{}};
    /// Visible ground lies [view_offset_m, view_offset_m + view_window_m] ahead of the tool.
    double view_offset_m = 0.5;
    double view_window_m = 2.0;
    double camera_height_m = 1.0;
    int image_width = 640;
    int image_height = 480;
    DetectorModel detector;
    StabilizerConfig stabilizer;
    ToolParams tool{0.5, 0.5, 0.05, 0.1};
};

void validate(const FieldScenario& s);

struct Field {
    std::vector<double> saplings;
    std::vector<double> weeds;
    bool operator==(const Field&) const = default;
};

Field generate_field(const FieldScenario& s);

/// Tool position and speed at time t along the speed profile, starting from x0.
struct Trajectory {
    double x0 = 0;
    std::vector<SpeedSegment> segments;

    double position_at(double t_seconds) const;
    double speed_at(double t_seconds) const;
    /// The same profile as speed steps along x.
    std::vector<SpeedStep> speed_by_position() const;
};

struct DetectorRun {
    CameraModel camera;
    Trajectory trajectory;
    std::vector<OdometrySample> odometry;  // one sample per frame, index = frame id
    std::vector<LoggedDetection> log;
    /// Per log entry: index of the detected sapling, or -1 for a false detection.
    std::vector<int> origin;
    /// Boxes of every in-view sapling per frame, for the evaluation harness.
    GroundTruthSet ground_truth;
    std::size_t in_view_sapling_frames = 0;
};

/// Frames at fps from the moment the first metre of line enters view until
/// the tool is past the line end by the view distance.
DetectorRun run_detector(const Field& field, const FieldScenario& s);

struct SimEvent {
    long frame_id = 0;
    double t_seconds = 0;
    double x_m = 0;
    std::string kind;  // "validated", "RETRACT", "EXTEND"
    double value = 0;  // validated position, or command position
};

struct SimReport {
    std::uint64_t seed = 0;
    int frames = 0;
    int saplings_total = 0;
    int saplings_validated = 0;
    /// Validated saplings whose footprint saw no cutting.
    int saplings_protected = 0;
    int false_validations = 0;
    int weeds_total = 0;
    int weeds_cut = 0;
    /// Cleared length over the weed-bearing line [0, line_length_m] divided by its length.
    double weeds_cleared_fraction = 0;
    double false_retraction_length_m = 0;
    /// Final validated estimates whose [x - delta, x + delta] saw the tool not fully retracted.
    int safety_violations = 0;
    std::vector<double> unprotected_saplings;
    std::vector<SimEvent> events;
    ToolSchedule schedule;
};

struct SimRun {
    Field field;
    DetectorRun detections;
    StabilizeRun stabilized;
    ToolProfile profile{{{0, 1.0}}};
    SimReport report;
};

SimRun simulate_run(const FieldScenario& s);
SimReport end_to_end(const FieldScenario& s);

nlohmann::json to_json(const SimReport& r, bool include_events = true);
nlohmann::json to_json(const FieldScenario& s);
/// Unknown keys are rejected at every level.
FieldScenario scenario_from_json(const nlohmann::json& j);
FieldScenario read_scenario(const std::filesystem::path& path);

/// Writes detections.jsonl, ground_truth.jsonl, odometry.jsonl, field.json,
/// schedule.json, events.jsonl and review.json into dir.
void write_traces(const SimRun& run, const std::filesystem::path& dir);

}  // namespace clearing
