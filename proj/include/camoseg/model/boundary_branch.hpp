#pragma once

#include "camoseg/model/feature_extractor.hpp"

namespace camoseg::model {

// Per-channel grayscale "closing" as the appendix spells it out: replicate
// pad, 3x3 minimum, pad, 3x3 maximum. (Standard morphology would call this
// order an opening; the filter is anti-extensive and idempotent.)
Var closing_op(const Var& x);

// Boundary feature branch: X_b = 1x1conv(closing(X) + X) per level.
class BoundaryBranch {
public:
    BoundaryBranch() = default;
    // num_levels linear maps; level 0 corresponds to the finest level served.
    BoundaryBranch(ParamStore& ps, const std::string& prefix, int dim, int num_levels, Rng& rng);

    Var boundary_features(const Var& x, int level_index) const;
    // Applies the branch to every level of a pyramid (shape-congruent output).
    FeaturePyramid apply(const FeaturePyramid& p) const;

private:
    std::vector<Conv2d> linear_map_;
};

}  // namespace camoseg::model
