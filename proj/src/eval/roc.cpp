#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "clearing/errors.hpp"
#include "clearing/eval.hpp"

namespace clearing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Score descending, then box, so the result does not depend on input order.
std::vector<std::size_t> score_order(std::span<const Detection> preds) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (preds[a].score != preds[b].score) return preds[a].score > preds[b].score;
        return preds[a].bbox < preds[b].bbox;
    });
    return order;
}

struct ScoredPrediction {
    double score;
    bool true_positive;
    long frame_id;
};

struct Sweep {
    std::vector<ScoredPrediction> preds;  // known frames only
    std::size_t ignored = 0;
};

Sweep label_predictions(std::span<const Detection> predictions, const GroundTruthSet& gt, double iou_threshold) {
    std::map<long, std::vector<Detection>> by_frame;
    Sweep sweep;
    for (const auto& p : predictions) {
        validate(p);
        if (!gt.contains(p.frame_id)) {
            ++sweep.ignored;
            continue;
        }
        by_frame[p.frame_id].push_back(p);
    }
    for (const auto& [frame, preds] : by_frame) {
        const auto m = match_detections(preds, gt.frames().at(frame), iou_threshold);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            sweep.preds.push_back({preds[i].score, m.is_true_positive[i], frame});
        }
    }
    std::sort(sweep.preds.begin(), sweep.preds.end(),
              [](const ScoredPrediction& a, const ScoredPrediction& b) { return a.score > b.score; });
    return sweep;
}

}  // namespace

void GroundTruthSet::add_frame(long frame_id, std::vector<BBox> boxes) {
    for (const auto& b : boxes) {
        if (!is_valid(b)) throw std::invalid_argument("ground-truth box is not well-formed");
    }
    if (!frames_.emplace(frame_id, std::move(boxes)).second) {
        throw std::invalid_argument("duplicate ground-truth frame id " + std::to_string(frame_id));
    }
}

std::size_t GroundTruthSet::instance_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [id, boxes] : frames_) n += boxes.size();
    return n;
}

std::size_t GroundTruthSet::negative_frame_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(frames_.begin(), frames_.end(), [](const auto& f) { return f.second.empty(); }));
}

MatchResult match_detections(std::span<const Detection> predictions, std::span<const BBox> ground_truth,
                             double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw std::invalid_argument("iou_threshold must be in (0,1]");
    MatchResult r;
    r.is_true_positive.assign(predictions.size(), false);
    std::vector<bool> claimed(ground_truth.size(), false);
    for (std::size_t p : score_order(predictions)) {
        std::size_t best = ground_truth.size();
        double best_iou = -1.0;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (claimed[g]) continue;
            const double v = iou(predictions[p].bbox, ground_truth[g]);
            if (v > best_iou) {
                best_iou = v;
                best = g;
            }
        }
        if (best < ground_truth.size() && best_iou >= iou_threshold) {
            claimed[best] = true;
            r.is_true_positive[p] = true;
            r.pairs.push_back({p, best, best_iou});
            ++r.true_positives;
        } else {
            ++r.false_positives;
        }
    }
    r.false_negatives = static_cast<int>(ground_truth.size()) - r.true_positives;
    return r;
}

// Greedy matching is score-ordered, so matching the detections above a
// threshold is the prefix of the full matching: one pass labels everything.
RocCurve roc_curve(std::span<const Detection> predictions, const GroundTruthSet& ground_truth, double iou_threshold) {
    RocCurve curve;
    curve.ground_truth_instances = ground_truth.instance_count();
    curve.negative_frames = ground_truth.negative_frame_count();
    curve.frames = ground_truth.frames().size();
    if (curve.ground_truth_instances == 0) throw UndefinedRateError("ROC needs at least one ground-truth instance");
    if (curve.negative_frames == 0) throw UndefinedRateError("ROC needs at least one negative frame");

    const auto sweep = label_predictions(predictions, ground_truth, iou_threshold);
    curve.ignored_predictions = sweep.ignored;

    const double n_pos = static_cast<double>(curve.ground_truth_instances);
    const double n_neg = static_cast<double>(curve.negative_frames);
    std::map<long, bool> alarmed;
    for (const auto& [id, boxes] : ground_truth.frames()) {
        if (boxes.empty()) alarmed[id] = false;
    }

    curve.points.push_back({0.0, 0.0, kInf});
    std::size_t tp = 0, fp_frames = 0;
    for (std::size_t i = 0; i < sweep.preds.size();) {
        const double s = sweep.preds[i].score;
        for (; i < sweep.preds.size() && sweep.preds[i].score == s; ++i) {
            const auto& p = sweep.preds[i];
            if (p.true_positive) ++tp;
            auto it = alarmed.find(p.frame_id);
            if (it != alarmed.end() && !it->second) {
                it->second = true;
                ++fp_frames;
            }
        }
        const RocPoint pt{fp_frames / n_neg, tp / n_pos, s};
        const auto& last = curve.points.back();
        if (pt.fpr != last.fpr || pt.tpr != last.tpr) curve.points.push_back(pt);
    }
    const auto& last = curve.points.back();
    if (last.fpr != 1.0 || last.tpr != 1.0) curve.points.push_back({1.0, 1.0, -kInf});
    return curve;
}

std::vector<FpPerFramePoint> fp_per_frame_curve(std::span<const Detection> predictions,
                                                const GroundTruthSet& ground_truth, double iou_threshold) {
    const std::size_t n_pos = ground_truth.instance_count();
    if (n_pos == 0) throw UndefinedRateError("curve needs at least one ground-truth instance");
    const double frames = static_cast<double>(ground_truth.frames().size());
    const auto sweep = label_predictions(predictions, ground_truth, iou_threshold);

    std::vector<FpPerFramePoint> out{{0.0, 0.0, kInf}};
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < sweep.preds.size();) {
        const double s = sweep.preds[i].score;
        for (; i < sweep.preds.size() && sweep.preds[i].score == s; ++i) {
            (sweep.preds[i].true_positive ? tp : fp) += 1;
        }
        out.push_back({fp / frames, static_cast<double>(tp) / n_pos, s});
    }
    return out;
}

double auroc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    return std::clamp(area, 0.0, 1.0);
}

WorkingPoint working_point(const RocCurve& curve, double target_specificity) {
    if (!(target_specificity >= 0.0 && target_specificity <= 1.0)) {
        throw std::invalid_argument("target specificity must be in [0,1]");
    }
    if (curve.points.empty()) throw std::invalid_argument("empty ROC curve");
    const double max_fpr = 1.0 - target_specificity + 1e-12;
    const RocPoint* best = nullptr;
    for (const auto& p : curve.points) {
        if (p.fpr > max_fpr) continue;
        if (!best || p.tpr > best->tpr) best = &p;
    }
    WorkingPoint wp;
    wp.target_specificity = target_specificity;
    if (!best || (std::isinf(best->threshold) && best->threshold > 0)) {
        wp.unreachable = true;
        return wp;
    }
    wp.threshold = best->threshold;
    wp.sensitivity = best->tpr;
    wp.specificity = 1.0 - best->fpr;
    return wp;
}

double max_accuracy(const RocCurve& curve, double positive_fraction) {
    if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0)) {
        throw std::invalid_argument("positive fraction must be in [0,1]");
    }
    double best = 0.0;
    for (const auto& p : curve.points) {
        best = std::max(best, positive_fraction * p.tpr + (1.0 - positive_fraction) * (1.0 - p.fpr));
    }
    return best;
}

}  // namespace clearing
