#include "camoseg/data/eval_ap.hpp"

#include <algorithm>
#include <map>

namespace camoseg::data {

double mask_iou(const Tensor& a, const Tensor& b) {
    check_contract(a.shape == b.shape, "mask_iou: shape mismatch");
    int64_t inter = 0, uni = 0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        const bool av = a[i] >= 0.5, bv = b[i] >= 0.5;
        inter += av && bv;
        uni += av || bv;
    }
    if (uni == 0) throw InvalidInputError("mask_iou: both masks are empty");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

APReport evaluate_ap(const std::vector<EvalPrediction>& predictions,
                     const std::vector<EvalGroundTruth>& ground_truths) {
    APReport report;
    const int n_gt = static_cast<int>(ground_truths.size());

    // Score-descending order, ties by input index.
    std::vector<int> order(predictions.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return predictions[static_cast<size_t>(a)].score > predictions[static_cast<size_t>(b)].score; });

    // IoU of each prediction against every ground truth in its image,
    // computed once and reused across thresholds.
    std::map<int, std::vector<int>> gts_by_image;
    for (size_t g = 0; g < ground_truths.size(); ++g)
        gts_by_image[ground_truths[g].image_index].push_back(static_cast<int>(g));
    std::vector<std::vector<std::pair<int, double>>> ious(predictions.size());
    for (size_t p = 0; p < predictions.size(); ++p) {
        auto it = gts_by_image.find(predictions[p].image_index);
        if (it == gts_by_image.end()) continue;
        bool pred_empty = true;
        for (double v : predictions[p].mask.v)
            if (v >= 0.5) {
                pred_empty = false;
                break;
            }
        for (int g : it->second) {
            const double iou = pred_empty ? 0.0 : mask_iou(predictions[p].mask, ground_truths[static_cast<size_t>(g)].mask);
            ious[p].emplace_back(g, iou);
        }
    }

    for (int k = 0; k < 10; ++k) {
        const double thr = static_cast<double>(50 + 5 * k) / 100.0;
        std::vector<char> gt_used(ground_truths.size(), 0);
        std::vector<char> is_tp;
        is_tp.reserve(order.size());
        for (int p : order) {
            int best_g = -1;
            double best_iou = thr;
            for (const auto& [g, iou] : ious[static_cast<size_t>(p)]) {
                if (gt_used[static_cast<size_t>(g)]) continue;
                // Strictly above the threshold; ties between ground truths
                // resolve to the lower index.
                if (iou > best_iou) {
                    best_iou = iou;
                    best_g = g;
                }
            }
            if (best_g >= 0) {
                gt_used[static_cast<size_t>(best_g)] = 1;
                is_tp.push_back(1);
            } else {
                is_tp.push_back(0);
            }
        }
        double ap = 0.0;
        if (n_gt > 0 && !is_tp.empty()) {
            std::vector<double> precision, recall;
            int tp = 0, fp = 0;
            for (char t : is_tp) {
                tp += t;
                fp += 1 - t;
                precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
                recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
            }
            // Monotone envelope, then 101-point interpolation.
            for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
                precision[static_cast<size_t>(i)] = std::max(precision[static_cast<size_t>(i)], precision[static_cast<size_t>(i) + 1]);
            double sum = 0.0;
            for (int r = 0; r <= 100; ++r) {
                const double rr = static_cast<double>(r) / 100.0;
                double best = 0.0;
                for (size_t i = 0; i < recall.size(); ++i)
                    if (recall[i] >= rr) {
                        best = precision[i];
                        break;
                    }
                sum += best;
            }
            ap = sum / 101.0;
        }
        report.per_threshold.emplace_back(50 + 5 * k, ap);
    }

    double mean = 0.0;
    for (const auto& [t, ap] : report.per_threshold) {
        mean += ap;
        if (t == 50) report.ap50 = ap;
        if (t == 75) report.ap75 = ap;
    }
    report.ap = mean / static_cast<double>(report.per_threshold.size());
    return report;
}

}  // namespace camoseg::data
