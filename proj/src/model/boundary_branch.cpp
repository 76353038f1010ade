#include "camoseg/model/boundary_branch.hpp"

namespace camoseg::model {

namespace ops = nn::ops;

Var closing_op(const Var& x) { return ops::max_filter3(ops::min_filter3(x)); }

BoundaryBranch::BoundaryBranch(ParamStore& ps, const std::string& prefix, int dim, int num_levels, Rng& rng) {
    for (int l = 0; l < num_levels; ++l)
        linear_map_.emplace_back(ps, prefix + ".lm" + std::to_string(l), dim, dim, 1, 1, 0, rng);
}

Var BoundaryBranch::boundary_features(const Var& x, int level_index) const {
    check_contract(level_index >= 0 && level_index < static_cast<int>(linear_map_.size()),
                   "boundary branch: level index out of range");
    return linear_map_[static_cast<size_t>(level_index)].forward(ops::add(closing_op(x), x));
}

FeaturePyramid BoundaryBranch::apply(const FeaturePyramid& p) const {
    FeaturePyramid out;
    out.image_h = p.image_h;
    out.image_w = p.image_w;
    for (size_t l = 0; l < p.levels.size(); ++l)
        out.levels.push_back({p.levels[l].stride, boundary_features(p.levels[l].feature, static_cast<int>(l))});
    return out;
}

}  // namespace camoseg::model
