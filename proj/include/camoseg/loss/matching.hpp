#pragma once

#include "camoseg/loss/hungarian.hpp"
#include "camoseg/loss/point_sampling.hpp"
#include "camoseg/model/multitask_heads.hpp"

namespace camoseg::loss {

using model::InstancePredictionSet;

struct LossWeights {
    double lambda = 2.0;      // shared BCE+Dice factor
    double lambda_loc = 5.0;  // location BCE factor
    double alpha = 1.0;       // mask task weight
    double beta = 2.0;        // boundary task weight
};

struct InstanceTarget {
    Tensor mask;      // binary [H,W] at image resolution
    Tensor boundary;  // binary [H,W]
};
using Targets = std::vector<InstanceTarget>;

// Plain (non-differentiable) loss formulas, also used as oracles.
double bce_loss(const Tensor& probs, const Tensor& targets);
double dice_loss(const Tensor& probs, const Tensor& targets, double eps = 1.0);

struct LossBreakdown {
    double loc_bce = 0.0;
    double mask_bce = 0.0;
    double mask_dice = 0.0;
    double boundary_bce = 0.0;
    double boundary_dice = 0.0;
    double total = 0.0;
};

double combine_total(const LossBreakdown& terms, const LossWeights& w);

// Matching cost mirrors the training loss: lambda_loc*BCE(loc,1) +
// alpha*lambda*(BCE+Dice)(mask) + beta*lambda*(BCE+Dice)(boundary), all
// evaluated at shared sampled points.
Tensor match_cost(const InstancePredictionSet& pred, const Targets& targets,
                  const Tensor& mask_pts, const Tensor& boundary_pts, const LossWeights& w);

struct LossOptions {
    LossWeights weights;
    int point_count = 112 * 112;
    double oversample = 3.0;
    double importance_fraction = 0.75;
    bool full_grid = false;  // swap importance sampling for all-pixel sampling
    uint64_t seed = 0;
};

// Deep-supervision loss over all decoder stages of one image, with per-stage
// Hungarian matching. Matched queries supervise mask/boundary/location(1);
// unmatched queries supervise location(0). When fixed_assignments is given it
// replaces matching (gradient audits re-evaluate a frozen match).
std::pair<Var, LossBreakdown> total_loss(const std::vector<InstancePredictionSet>& stages,
                                         const Targets& targets, const LossOptions& opt,
                                         const std::vector<MatchAssignment>* fixed_assignments = nullptr,
                                         std::vector<MatchAssignment>* assignments_out = nullptr);

}  // namespace camoseg::loss
