#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "clearing/simulate.hpp"

namespace clearing {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

bool is_probability(double p) { return p >= 0 && p <= 1; }

}  // namespace

void validate(const FieldScenario& s) {
    require(s.line_length_m > 0 && std::isfinite(s.line_length_m), "line_length_m must be > 0");
    require(s.sapling_spacing_mean_m > 0, "sapling_spacing_mean_m must be > 0");
    require(s.spacing_jitter_m >= 0 && s.spacing_jitter_m < s.sapling_spacing_mean_m,
            "spacing_jitter_m must be in [0, spacing mean)");
    require(is_probability(s.skip_probability), "skip_probability must be in [0, 1]");
    require(s.weed_density_per_m >= 0 && std::isfinite(s.weed_density_per_m), "weed_density_per_m must be >= 0");
    require(s.sapling_radius_m >= 0 && std::isfinite(s.sapling_radius_m), "sapling_radius_m must be >= 0");
    require(s.fps > 0 && std::isfinite(s.fps), "fps must be > 0");
    require(!s.speed_profile.empty(), "speed_profile must not be empty");
    for (const auto& seg : s.speed_profile) {
        require(seg.v_mps > 0 && std::isfinite(seg.v_mps), "speed must be > 0");
        require(seg.duration_s > 0, "speed segment duration must be > 0");
    }
    require(s.view_offset_m >= 0, "view_offset_m must be >= 0");
    require(s.view_window_m > 0, "view_window_m must be > 0");
    require(s.camera_height_m > 0, "camera_height_m must be > 0");
    require(s.image_width > 0 && s.image_height > 0, "image size must be positive");
    const auto& d = s.detector;
    require(is_probability(d.tp_prob), "tp_prob must be in [0, 1]");
    require(d.fp_per_frame >= 0 && std::isfinite(d.fp_per_frame), "fp_per_frame must be >= 0");
    require(d.pos_noise_m >= 0, "pos_noise_m must be >= 0");
    for (const auto& r : {d.true_score, d.false_score}) {
        require(r.lo <= r.hi && r.lo >= 0 && r.hi <= 1, "score ranges must lie in [0, 1]");
    }
    validate(s.stabilizer);
    validate(s.tool);
}

Field generate_field(const FieldScenario& s) {
    validate(s);
    std::seed_seq seq{s.seed, std::uint64_t{1}};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> jitter(-s.spacing_jitter_m, s.spacing_jitter_m);
    std::bernoulli_distribution skip(s.skip_probability);
    Field f;
    double x = 0;
    while (true) {
        x += s.spacing_jitter_m > 0 ? s.sapling_spacing_mean_m + jitter(rng) : s.sapling_spacing_mean_m;
        if (x > s.line_length_m) break;
        if (!skip(rng)) f.saplings.push_back(x);
    }
    if (s.weed_density_per_m > 0) {
        std::poisson_distribution<int> count(s.weed_density_per_m * s.line_length_m);
        std::uniform_real_distribution<double> where(0, s.line_length_m);
        f.weeds.resize(count(rng));
        for (auto& w : f.weeds) w = where(rng);
        std::sort(f.weeds.begin(), f.weeds.end());
    }
    return f;
}

double Trajectory::position_at(double t) const {
    double x = x0, t0 = 0;
    for (const auto& seg : segments) {
        const double end = t0 + seg.duration_s;
        if (t <= end) return x + (t - t0) * seg.v_mps;
        x += seg.duration_s * seg.v_mps;
        t0 = end;
    }
    // past a finite last segment the last speed continues
    return x + (t - t0) * segments.back().v_mps;
}

double Trajectory::speed_at(double t) const {
    double t0 = 0;
    for (const auto& seg : segments) {
        if (t < t0 + seg.duration_s) return seg.v_mps;
        t0 += seg.duration_s;
    }
    return segments.back().v_mps;
}

std::vector<SpeedStep> Trajectory::speed_by_position() const {
    std::vector<SpeedStep> steps;
    double x = x0;
    for (const auto& seg : segments) {
        steps.push_back({x, seg.v_mps});
        if (!std::isfinite(seg.duration_s)) break;
        x += seg.duration_s * seg.v_mps;
    }
    return steps;
}

DetectorRun run_detector(const Field& field, const FieldScenario& s) {
    validate(s);
    DetectorRun run;
    const double near = s.view_offset_m, far = s.view_offset_m + s.view_window_m;
    run.camera = CameraModel::covering(near, far, s.camera_height_m, s.image_width, s.image_height);
    run.trajectory = {-far, s.speed_profile};

    std::seed_seq seq{s.seed, std::uint64_t{2}};
    std::mt19937_64 rng(seq);
    const auto& dm = s.detector;
    std::bernoulli_distribution seen(dm.tp_prob);
    std::normal_distribution<double> noise(0.0, dm.pos_noise_m > 0 ? dm.pos_noise_m : 1.0);
    std::uniform_real_distribution<double> true_score(dm.true_score.lo, dm.true_score.hi);
    std::uniform_real_distribution<double> false_score(dm.false_score.lo, dm.false_score.hi);
    std::uniform_real_distribution<double> in_view(near, far);
    std::poisson_distribution<int> false_count(dm.fp_per_frame > 0 ? dm.fp_per_frame : 1.0);

    const auto& cam = run.camera;
    const double half_width = 16;
    auto box_at = [&](double offset) -> std::optional<BBox> {
        const double row = image_row_for_offset(offset, cam);
        if (!std::isfinite(row) || row < 0 || row > cam.image_height - 1) return std::nullopt;
        const double half = std::min({16.0, row, cam.image_height - 1 - row});
        const double col = 0.5 * cam.image_width;
        return BBox{col - half_width, row - half, col + half_width, row + half};
    };

    const double stop = s.line_length_m + far;
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) / s.fps;
        const double x = run.trajectory.position_at(t);
        run.odometry.push_back({t, x, run.trajectory.speed_at(t)});
        std::vector<BBox> truth;
        for (std::size_t i = 0; i < field.saplings.size(); ++i) {
            const double d = field.saplings[i] - x;
            if (d < near || d > far) continue;
            ++run.in_view_sapling_frames;
            if (auto b = box_at(d)) truth.push_back(*b);
            if (!seen(rng)) continue;
            const double observed = dm.pos_noise_m > 0 ? d + noise(rng) : d;
            const double score = true_score(rng);
            if (auto b = box_at(observed)) {
                run.log.push_back({{k, *b, score, std::nullopt}, t, std::nullopt});
                run.origin.push_back(static_cast<int>(i));
            }
        }
        const int fps_here = dm.fp_per_frame > 0 ? false_count(rng) : 0;
        for (int j = 0; j < fps_here; ++j) {
            const double d = in_view(rng);
            const double score = false_score(rng);
            if (auto b = box_at(d)) {
                run.log.push_back({{k, *b, score, std::nullopt}, t, std::nullopt});
                run.origin.push_back(-1);
            }
        }
        run.ground_truth.add_frame(k, std::move(truth));
        if (x >= stop) break;
    }
    return run;
}

}  // namespace clearing
