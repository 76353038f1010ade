#include "camoseg/loss/matching.hpp"

#include <cmath>

namespace camoseg::loss {

namespace ops = nn::ops;
using nn::constant;
using nn::Rng;

double bce_loss(const Tensor& probs, const Tensor& targets) {
    check_contract(probs.numel() == targets.numel(), "bce_loss: size mismatch");
    double acc = 0.0;
    for (int64_t i = 0; i < probs.numel(); ++i) {
        const double p = std::clamp(probs[i], 1e-12, 1.0 - 1e-12);
        acc += -(targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p));
    }
    return acc / static_cast<double>(probs.numel());
}

double dice_loss(const Tensor& probs, const Tensor& targets, double eps) {
    check_contract(probs.numel() == targets.numel(), "dice_loss: size mismatch");
    double inter = 0.0, psum = 0.0, tsum = 0.0;
    for (int64_t i = 0; i < probs.numel(); ++i) {
        inter += probs[i] * targets[i];
        psum += probs[i];
        tsum += targets[i];
    }
    return 1.0 - (2.0 * inter + eps) / (psum + tsum + eps);
}

double combine_total(const LossBreakdown& t, const LossWeights& w) {
    return w.lambda_loc * t.loc_bce + w.alpha * w.lambda * (t.mask_bce + t.mask_dice) +
           w.beta * w.lambda * (t.boundary_bce + t.boundary_dice);
}

namespace {
double bce_logit_scalar(double logit, double target) {
    return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

// Sampled prediction probabilities + targets for one query map.
void sampled_probs(const Tensor& logits /*[h,w]*/, const Tensor& gt, const Tensor& pts,
                   Tensor& probs_out, Tensor& t_out) {
    Tensor raw = read_map(logits, pts);
    probs_out = Tensor({raw.dim(0)});
    for (int64_t i = 0; i < raw.numel(); ++i) probs_out[i] = 1.0 / (1.0 + std::exp(-raw[i]));
    t_out = read_targets(gt, pts);
}

Tensor slice_map(const Tensor& maps /*[N,h,w]*/, int n) {
    const int h = maps.dim(1), w = maps.dim(2);
    Tensor out({h, w});
    std::copy(maps.v.begin() + static_cast<int64_t>(n) * h * w,
              maps.v.begin() + static_cast<int64_t>(n + 1) * h * w, out.v.begin());
    return out;
}
}  // namespace

Tensor match_cost(const InstancePredictionSet& pred, const Targets& targets,
                  const Tensor& mask_pts, const Tensor& boundary_pts, const LossWeights& w) {
    const int G = static_cast<int>(targets.size());
    const int N = pred.location_logits->value.dim(0);
    // Sample each prediction and each ground truth once; pairs combine the
    // cached point values.
    std::vector<Tensor> pred_mask(static_cast<size_t>(N)), pred_bd(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) {
        Tensor raw = read_map(slice_map(pred.mask_logits->value, n), mask_pts);
        pred_mask[static_cast<size_t>(n)] = Tensor({raw.dim(0)});
        for (int64_t i = 0; i < raw.numel(); ++i)
            pred_mask[static_cast<size_t>(n)][i] = 1.0 / (1.0 + std::exp(-raw[i]));
        Tensor rawb = read_map(slice_map(pred.boundary_logits->value, n), boundary_pts);
        pred_bd[static_cast<size_t>(n)] = Tensor({rawb.dim(0)});
        for (int64_t i = 0; i < rawb.numel(); ++i)
            pred_bd[static_cast<size_t>(n)][i] = 1.0 / (1.0 + std::exp(-rawb[i]));
    }
    std::vector<Tensor> gt_mask(static_cast<size_t>(G)), gt_bd(static_cast<size_t>(G));
    for (int g = 0; g < G; ++g) {
        gt_mask[static_cast<size_t>(g)] = read_targets(targets[static_cast<size_t>(g)].mask, mask_pts);
        gt_bd[static_cast<size_t>(g)] = read_targets(targets[static_cast<size_t>(g)].boundary, boundary_pts);
    }
    Tensor cost({G, N});
    for (int n = 0; n < N; ++n) {
        const double loc_term = w.lambda_loc * bce_logit_scalar(pred.location_logits->value[n], 1.0);
        for (int g = 0; g < G; ++g) {
            const Tensor& mp = pred_mask[static_cast<size_t>(n)];
            const Tensor& mt = gt_mask[static_cast<size_t>(g)];
            const Tensor& bp = pred_bd[static_cast<size_t>(n)];
            const Tensor& bt = gt_bd[static_cast<size_t>(g)];
            cost.at(g, n) = loc_term +
                            w.alpha * w.lambda * (bce_loss(mp, mt) + dice_loss(mp, mt)) +
                            w.beta * w.lambda * (bce_loss(bp, bt) + dice_loss(bp, bt));
        }
    }
    return cost;
}

std::pair<Var, LossBreakdown> total_loss(const std::vector<InstancePredictionSet>& stages,
                                         const Targets& targets, const LossOptions& opt,
                                         const std::vector<MatchAssignment>* fixed_assignments,
                                         std::vector<MatchAssignment>* assignments_out) {
    check_contract(!stages.empty(), "total_loss: no stages");
    const int G = static_cast<int>(targets.size());
    const int S = static_cast<int>(stages.size());

    Var loc_acc, mask_bce_acc, mask_dice_acc, bd_bce_acc, bd_dice_acc;
    auto accumulate = [](Var& acc, const Var& term) { acc = acc ? ops::add(acc, term) : term; };

    std::vector<MatchAssignment> assignments;
    for (int s = 0; s < S; ++s) {
        const auto& pred = stages[static_cast<size_t>(s)];
        const int N = pred.location_logits->value.dim(0);
        MatchAssignment assign;
        if (fixed_assignments) {
            assign = (*fixed_assignments)[static_cast<size_t>(s)];
        } else if (G > 0) {
            const Tensor mask_pts = uniform_points(opt.point_count, Rng::derive(opt.seed, 2 * s));
            const Tensor bd_pts = uniform_points(opt.point_count, Rng::derive(opt.seed, 2 * s + 1));
            assign = hungarian_match(match_cost(pred, targets, mask_pts, bd_pts, opt.weights));
        }
        assignments.push_back(assign);

        Tensor loc_targets = Tensor::zeros({N});
        for (const auto& [g, n] : assign.pairs) loc_targets[n] = 1.0;
        accumulate(loc_acc, ops::bce_with_logits_mean(pred.location_logits, loc_targets));

        if (!assign.pairs.empty()) {
            Var mb, md, bb, bd;
            for (const auto& [g, n] : assign.pairs) {
                const auto& tgt = targets[static_cast<size_t>(g)];
                const int h = pred.mask_logits->value.dim(1), w = pred.mask_logits->value.dim(2);
                Var mask_map = ops::reshape(
                    ops::slice_rows(ops::reshape(pred.mask_logits, {N, h * w}), n, 1), {h, w});
                Var bd_map = ops::reshape(
                    ops::slice_rows(ops::reshape(pred.boundary_logits, {N, h * w}), n, 1), {h, w});
                // The sampling seed keys on the matched query so ground-truth
                // order cannot perturb the point sets.
                const SampleStrategy strat = opt.full_grid ? SampleStrategy::FullGrid : SampleStrategy::Importance;
                SampledPair ms = sample_points(mask_map, tgt.mask, opt.point_count, strat,
                                               Rng::derive(opt.seed, 0x9000 + 4096 * s + 2 * n),
                                               opt.oversample, opt.importance_fraction);
                SampledPair bs = sample_points(bd_map, tgt.boundary, opt.point_count, strat,
                                               Rng::derive(opt.seed, 0x9000 + 4096 * s + 2 * n + 1),
                                               opt.oversample, opt.importance_fraction);
                accumulate(mb, ops::bce_with_logits_mean(ms.pred_logits, ms.targets));
                accumulate(md, ops::dice_from_logits(ms.pred_logits, ms.targets));
                accumulate(bb, ops::bce_with_logits_mean(bs.pred_logits, bs.targets));
                accumulate(bd, ops::dice_from_logits(bs.pred_logits, bs.targets));
            }
            const double inv = 1.0 / static_cast<double>(assign.pairs.size());
            accumulate(mask_bce_acc, ops::scale(mb, inv));
            accumulate(mask_dice_acc, ops::scale(md, inv));
            accumulate(bd_bce_acc, ops::scale(bb, inv));
            accumulate(bd_dice_acc, ops::scale(bd, inv));
        }
    }
    if (assignments_out) *assignments_out = assignments;

    const double inv_s = 1.0 / static_cast<double>(S);
    Var zero = constant(Tensor::scalar(0.0));
    Var loc = loc_acc ? ops::scale(loc_acc, inv_s) : zero;
    Var mbce = mask_bce_acc ? ops::scale(mask_bce_acc, inv_s) : zero;
    Var mdice = mask_dice_acc ? ops::scale(mask_dice_acc, inv_s) : zero;
    Var bbce = bd_bce_acc ? ops::scale(bd_bce_acc, inv_s) : zero;
    Var bdice = bd_dice_acc ? ops::scale(bd_dice_acc, inv_s) : zero;

    LossBreakdown terms;
    terms.loc_bce = loc->value[0];
    terms.mask_bce = mbce->value[0];
    terms.mask_dice = mdice->value[0];
    terms.boundary_bce = bbce->value[0];
    terms.boundary_dice = bdice->value[0];
    terms.total = combine_total(terms, opt.weights);

    const auto& w = opt.weights;
    Var total = ops::add(
        ops::scale(loc, w.lambda_loc),
        ops::add(ops::scale(ops::add(mbce, mdice), w.alpha * w.lambda),
                 ops::scale(ops::add(bbce, bdice), w.beta * w.lambda)));
    return {total, terms};
}

}  // namespace camoseg::loss
