#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <stdexcept>

#include "clearing/errors.hpp"
#include "clearing/stabilize.hpp"

namespace clearing {

void validate(const StabilizerConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("stabilizer n must be >= 1");
    if (!(cfg.gate_m > 0.0)) throw std::invalid_argument("stabilizer gate must be > 0");
    if (cfg.max_gap_frames < 0) throw std::invalid_argument("max_gap_frames must be >= 0");
}

Stabilizer::Stabilizer(StabilizerConfig cfg) : cfg_(cfg) { validate(cfg_); }

void Stabilizer::expire_stale(long frame_id) {
    // A track last seen at L has missed frame_id - L - 1 frames by now.
    auto keep = std::stable_partition(live_.begin(), live_.end(), [&](const Track& t) {
        return frame_id - t.last_seen - 1 <= cfg_.max_gap_frames;
    });
    std::move(keep, live_.end(), std::back_inserter(expired_));
    live_.erase(keep, live_.end());
}

std::vector<ValidatedSapling> Stabilizer::step(long frame_id, std::span<const WorldDetection> detections) {
    if (finished_) throw ProtocolError("stabilizer already finished");
    if (last_frame_ && frame_id <= *last_frame_) {
        throw ProtocolError("frame ids must increase: got " + std::to_string(frame_id) + " after " +
                            std::to_string(*last_frame_));
    }
    for (const auto& d : detections) {
        if (!std::isfinite(d.x_world_m)) throw std::invalid_argument("world position is not finite");
    }
    last_frame_ = frame_id;
    expire_stale(frame_id);

    struct Candidate {
        double distance;
        std::size_t track;
        std::size_t detection;
    };
    std::vector<Candidate> pairs;
    for (std::size_t t = 0; t < live_.size(); ++t) {
        for (std::size_t d = 0; d < detections.size(); ++d) {
            const double dist = std::abs(live_[t].x_world_m - detections[d].x_world_m);
            if (dist <= cfg_.gate_m) pairs.push_back({dist, t, d});
        }
    }
    // Closest pair first; ties by track age, then detection order.
    std::sort(pairs.begin(), pairs.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        if (a.track != b.track) return live_[a.track].id < live_[b.track].id;
        return a.detection < b.detection;
    });

    std::vector<bool> track_taken(live_.size(), false), det_taken(detections.size(), false);
    std::vector<ValidatedSapling> newly;
    auto maybe_validate = [&](Track& t) {
        if (!t.validated && t.hits >= cfg_.n) {
            t.validated = true;
            t.validated_frame = frame_id;
            newly.push_back({t.x_world_m, frame_id, t.id});
        }
    };

    for (const auto& c : pairs) {
        if (track_taken[c.track] || det_taken[c.detection]) continue;
        track_taken[c.track] = det_taken[c.detection] = true;
        auto& t = live_[c.track];
        const auto& d = detections[c.detection];
        t.observations.push_back({frame_id, d.x_world_m, d.score, t.x_world_m, d.source});
        ++t.hits;
        t.last_seen = frame_id;
        t.score_history.push_back(d.score);
        if (cfg_.position_update == PositionUpdate::mean) {
            t.x_world_m += (d.x_world_m - t.x_world_m) / t.hits;
        } else {
            t.x_world_m = d.x_world_m;
        }
        maybe_validate(t);
    }
    for (std::size_t d = 0; d < detections.size(); ++d) {
        if (det_taken[d]) continue;
        Track t;
        t.id = next_id_++;
        t.x_world_m = detections[d].x_world_m;
        t.hits = 1;
        t.first_seen = t.last_seen = frame_id;
        t.score_history.push_back(detections[d].score);
        t.observations.push_back({frame_id, detections[d].x_world_m, detections[d].score, std::nullopt,
                                  detections[d].source});
        maybe_validate(t);
        live_.push_back(std::move(t));
    }
    validated_.insert(validated_.end(), newly.begin(), newly.end());
    expire_stale(frame_id + 1);
    return newly;
}

void Stabilizer::finish() {
    if (finished_) return;
    for (auto& t : live_) expired_.push_back(std::move(t));
    live_.clear();
    std::sort(expired_.begin(), expired_.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
    finished_ = true;
}

std::vector<ReviewCandidate> Stabilizer::review_candidates() const {
    if (!finished_) throw ProtocolError("review candidates are only available after finish()");
    std::vector<ReviewCandidate> out;
    for (const auto& t : expired_) {
        if (t.validated || t.hits >= cfg_.n) continue;
        out.push_back({t.id, t.x_world_m, t.hits, t.hits == 1 ? "single-frame-detection" : "unconfirmed-track",
                       t.observations});
    }
    return out;
}

StabilizeRun stabilize_log(const std::vector<LoggedDetection>& log, std::span<const OdometrySample> odometry,
                           const CameraModel& cam, const StabilizerConfig& cfg) {
    validate(cam);
    std::map<long, std::vector<WorldDetection>> frames;
    for (const auto& d : log) {
        const auto odo = interpolate_odometry(odometry, d.t_seconds);
        frames[d.detection.frame_id].push_back({project_detection(d.detection, cam, odo), d.detection.score, d});
    }
    Stabilizer stab(cfg);
    for (const auto& [frame, dets] : frames) stab.step(frame, dets);
    stab.finish();
    return {stab.validated(), stab.review_candidates(), stab.expired_tracks()};
}

std::optional<PositionUpdate> parse_position_update(std::string_view name) {
    if (name == "mean") return PositionUpdate::mean;
    if (name == "last") return PositionUpdate::last;
    return std::nullopt;
}

std::string_view to_string(PositionUpdate u) { return u == PositionUpdate::mean ? "mean" : "last"; }

}  // namespace clearing
