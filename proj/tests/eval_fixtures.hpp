#pragma once

#include <random>
#include <vector>

#include "clearing/eval.hpp"

// Synthetic one-detection-per-frame corpora: positive frames carry one
// ground-truth box and a prediction on it; negative frames carry one stray
// prediction and no boxes.
struct SyntheticEval {
    std::vector<clearing::Detection> predictions;
    clearing::GroundTruthSet ground_truth;
};

template <typename PosScore, typename NegScore>
SyntheticEval synthetic_eval(std::mt19937_64& rng, int positives, int negatives, PosScore pos, NegScore neg) {
    SyntheticEval s;
    const clearing::BBox box{10, 10, 50, 50};
    long frame = 0;
    for (int i = 0; i < positives; ++i, ++frame) {
        s.ground_truth.add_frame(frame, {box});
        s.predictions.push_back({frame, box, pos(rng), std::nullopt});
    }
    for (int i = 0; i < negatives; ++i, ++frame) {
        s.ground_truth.add_frame(frame, {});
        s.predictions.push_back({frame, {100, 100, 140, 140}, neg(rng), std::nullopt});
    }
    return s;
}
