#pragma once

#include <limits>
#include <map>
#include <span>
#include <vector>

#include "clearing/imaging.hpp"

namespace clearing {

/// Ground-truth boxes per frame. Frames with no boxes are the negative frames.
class GroundTruthSet {
public:
    /// Throws std::invalid_argument on a duplicate frame id or malformed box.
    void add_frame(long frame_id, std::vector<BBox> boxes);

    const std::map<long, std::vector<BBox>>& frames() const noexcept { return frames_; }
    bool contains(long frame_id) const { return frames_.count(frame_id) != 0; }
    std::size_t instance_count() const noexcept;
    std::size_t negative_frame_count() const noexcept;

private:
    std::map<long, std::vector<BBox>> frames_;
};

struct MatchedPair {
    std::size_t prediction;  // index into the input predictions
    std::size_t ground_truth;
    double iou;
};

struct MatchResult {
    int true_positives = 0;
    int false_positives = 0;
    int false_negatives = 0;
    std::vector<MatchedPair> pairs;
    /// Per input prediction: did it claim a ground-truth box.
    std::vector<bool> is_true_positive;
};

inline constexpr double kDefaultIouThreshold = 0.5;

/// Greedy matching within one frame: predictions by descending score (ties by
/// box), each claiming the unclaimed ground truth of highest IoU >= threshold.
MatchResult match_detections(std::span<const Detection> predictions, std::span<const BBox> ground_truth,
                             double iou_threshold = kDefaultIouThreshold);

struct RocPoint {
    double fpr = 0;
    double tpr = 0;
    /// Score threshold (detections with score >= threshold survive). The
    /// (0,0) anchor uses +inf and the (1,1) anchor -inf.
    double threshold = 0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    std::size_t ground_truth_instances = 0;
    std::size_t negative_frames = 0;
    std::size_t frames = 0;
    /// Predictions whose frame is not in the ground-truth set.
    std::size_t ignored_predictions = 0;
};

/// Sweeps every distinct score. TPR = matched instances / all ground-truth
/// instances; FPR = fraction of negative frames with at least one surviving
/// detection. Throws UndefinedRateError without instances or negative frames.
RocCurve roc_curve(std::span<const Detection> predictions, const GroundTruthSet& ground_truth,
                   double iou_threshold = kDefaultIouThreshold);

/// Alternate curve: false detections per frame over all frames vs TPR.
struct FpPerFramePoint {
    double fp_per_frame = 0;
    double tpr = 0;
    double threshold = 0;
};
std::vector<FpPerFramePoint> fp_per_frame_curve(std::span<const Detection> predictions,
                                                const GroundTruthSet& ground_truth,
                                                double iou_threshold = kDefaultIouThreshold);

/// Trapezoidal area over fpr in [0,1].
double auroc(const RocCurve& curve);

struct WorkingPoint {
    double target_specificity = 0;
    double threshold = std::numeric_limits<double>::infinity();
    double sensitivity = 0;
    double specificity = 1;
    /// No scored point satisfies the FPR bound; the (0,0) anchor was returned.
    bool unreachable = false;
};

/// Highest-sensitivity point with FPR <= 1 - target_specificity.
WorkingPoint working_point(const RocCurve& curve, double target_specificity);

/// max over points of p*TPR + (1-p)*(1-FPR).
double max_accuracy(const RocCurve& curve, double positive_fraction);

}  // namespace clearing
