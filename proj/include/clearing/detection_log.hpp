#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clearing/eval.hpp"
#include "clearing/imaging.hpp"
#include "json.hpp"

namespace clearing {

/// One DetectionLog line: {frame_id, t_seconds, bbox, score} with optional
/// instance_confidence and image_id.
struct LoggedDetection {
    Detection detection;
    double t_seconds = 0;
    std::optional<std::string> image_id;
    bool operator==(const LoggedDetection&) const = default;
};

nlohmann::json to_json(const LoggedDetection& d);
LoggedDetection logged_detection_from_json(const nlohmann::json& j);

/// Reads JSON-lines; blank lines are skipped. Errors name the offending line.
std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

std::vector<LoggedDetection> read_detection_log(const std::filesystem::path& path);
void write_detection_log(const std::filesystem::path& path, const std::vector<LoggedDetection>& log);

/// GroundTruth lines: {frame_id, boxes: [[x0,y0,x1,y1], ...]}
GroundTruthSet read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruthSet& gt);

std::vector<Detection> detections_of(const std::vector<LoggedDetection>& log);

struct EvalOptions {
    double iou_threshold = kDefaultIouThreshold;
    /// Prior for max accuracy; defaults to the positive-frame fraction.
    std::optional<double> positive_fraction;
    std::vector<double> target_specificities{0.95};
    bool include_fp_per_frame = false;
};

/// {auroc, max_accuracy, positive_fraction, curve, working_points, ...}
nlohmann::json evaluation_report(std::span<const Detection> predictions, const GroundTruthSet& gt,
                                 const EvalOptions& options = {});

/// Standalone SVG of the ROC curve with the chance diagonal.
std::string roc_svg(const RocCurve& curve, const std::string& title = "ROC");

}  // namespace clearing
