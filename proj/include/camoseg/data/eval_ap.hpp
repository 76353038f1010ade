#pragma once

#include <vector>

#include "camoseg/nn/tensor.hpp"

namespace camoseg::data {

using nn::Tensor;

// |a n b| / |a u b|. Both masks empty is rejected as invalid input.
double mask_iou(const Tensor& a, const Tensor& b);

struct APReport {
    double ap = 0.0;
    double ap50 = 0.0;
    double ap75 = 0.0;
    // (threshold in percent, AP); thresholds 50,55,...,95.
    std::vector<std::pair<int, double>> per_threshold;
};

struct EvalPrediction {
    int image_index = 0;
    double score = 0.0;
    Tensor mask;  // binary [H,W]
};

struct EvalGroundTruth {
    int image_index = 0;
    Tensor mask;
};

// Class-agnostic COCO-style mask AP: predictions sort by score (ties by input
// index), greedily claim the best still-free ground truth in their image with
// IoU strictly above the threshold, and the 101-point interpolated
// precision-recall area averages over the ten thresholds.
APReport evaluate_ap(const std::vector<EvalPrediction>& predictions,
                     const std::vector<EvalGroundTruth>& ground_truths);

}  // namespace camoseg::data
