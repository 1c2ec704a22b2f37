#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clearing/detection_log.hpp"
#include "clearing/imaging.hpp"

namespace clearing {

/// Pinhole camera above flat ground, tilted forward from vertical.
struct CameraModel {
    double height_m = 1.0;
    double tilt_rad = 0.5;
    double fx = 1000, fy = 1000;
    double cx = 320, cy = 240;
    int image_width = 640, image_height = 480;

    /// Camera whose vertical field of view spans ground offsets [near_m, far_m]
    /// with the given fractional margin on each side.
    static CameraModel covering(double near_m, double far_m, double height_m, int image_width, int image_height,
                                double margin = 0.05);
};

void validate(const CameraModel& cam);

/// Forward ground offset of the ray through image row `v_px`.
/// Throws NoGroundIntersectionError when the ray does not descend to the ground.
double forward_offset(double v_px, const CameraModel& cam);
/// Inverse of forward_offset.
double image_row_for_offset(double offset_m, const CameraModel& cam);

struct OdometrySample {
    double t_seconds = 0;
    double x_m = 0;
    double v_mps = 0;
    bool operator==(const OdometrySample&) const = default;
};

/// Linear interpolation of position at time t; clamps outside the stream.
OdometrySample interpolate_odometry(std::span<const OdometrySample> stream, double t_seconds);

/// odo.x_m plus the forward offset of the bbox centre row.
double project_detection(const Detection& det, const CameraModel& cam, const OdometrySample& odo);

enum class PositionUpdate { mean, last };

struct StabilizerConfig {
    int n = 3;
    double gate_m = 0.30;
    int max_gap_frames = 2;
    PositionUpdate position_update = PositionUpdate::mean;
};

void validate(const StabilizerConfig& cfg);

struct WorldDetection {
    double x_world_m = 0;
    double score = 0;
    std::optional<LoggedDetection> source;
};

struct TrackObservation {
    long frame_id = 0;
    double x_world_m = 0;
    double score = 0;
    /// Track estimate when the detection was associated (absent for the opening detection).
    std::optional<double> track_estimate;
    std::optional<LoggedDetection> source;
};

struct Track {
    long id = 0;
    double x_world_m = 0;
    int hits = 0;
    long first_seen = 0;
    long last_seen = 0;
    bool validated = false;
    std::optional<long> validated_frame;
    std::vector<double> score_history;
    std::vector<TrackObservation> observations;
};

struct ValidatedSapling {
    double x_s_m = 0;
    long frame_id = 0;
    long track_id = 0;
    bool operator==(const ValidatedSapling&) const = default;
};

struct ReviewCandidate {
    long track_id = 0;
    double x_world_m = 0;
    int hits = 0;
    std::string reason;  // "single-frame-detection" or "unconfirmed-track"
    std::vector<TrackObservation> observations;
};

/// n-frame validation over a time-ordered detection stream. One instance per
/// stream; not safe for concurrent use.
class Stabilizer {
public:
    explicit Stabilizer(StabilizerConfig cfg = {});

    /// Associates one frame's detections and returns the saplings validated by
    /// it. Throws ProtocolError when frame_id does not increase or after finish().
    std::vector<ValidatedSapling> step(long frame_id, std::span<const WorldDetection> detections);

    /// Ends the run: every live track expires.
    void finish();

    /// Expired tracks that never reached n hits. Throws ProtocolError before finish().
    std::vector<ReviewCandidate> review_candidates() const;

    const StabilizerConfig& config() const noexcept { return cfg_; }
    const std::vector<Track>& live_tracks() const noexcept { return live_; }
    const std::vector<Track>& expired_tracks() const noexcept { return expired_; }
    const std::vector<ValidatedSapling>& validated() const noexcept { return validated_; }
    bool finished() const noexcept { return finished_; }

private:
    void expire_stale(long frame_id);

    StabilizerConfig cfg_;
    std::vector<Track> live_;
    std::vector<Track> expired_;
    std::vector<ValidatedSapling> validated_;
    std::optional<long> last_frame_;
    long next_id_ = 1;
    bool finished_ = false;
};

struct StabilizeRun {
    std::vector<ValidatedSapling> validated;
    std::vector<ReviewCandidate> review;
    std::vector<Track> tracks;  // all tracks, expired at end of run
};

/// Projects a detection log with odometry and runs the stabilizer frame by frame.
StabilizeRun stabilize_log(const std::vector<LoggedDetection>& log, std::span<const OdometrySample> odometry,
                           const CameraModel& cam, const StabilizerConfig& cfg);

nlohmann::json to_json(const CameraModel& cam);
CameraModel camera_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ValidatedSapling& s);
ValidatedSapling validated_sapling_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReviewCandidate& c);
ReviewCandidate review_candidate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OdometrySample& o);
OdometrySample odometry_from_json(const nlohmann::json& j);
std::vector<OdometrySample> read_odometry(const std::filesystem::path& path);

std::optional<PositionUpdate> parse_position_update(std::string_view name);
std::string_view to_string(PositionUpdate u);

/// {n, gate_m, max_gap_frames, position_update}; missing keys keep defaults.
nlohmann::json to_json(const StabilizerConfig& cfg);
StabilizerConfig stabilizer_config_from_json(const nlohmann::json& j);

}  // namespace clearing
