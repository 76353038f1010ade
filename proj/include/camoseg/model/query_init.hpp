#pragma once

#include "camoseg/model/feature_extractor.hpp"

namespace camoseg::model {

enum class QueryRole { Mask, Boundary, Composed };

struct QuerySet {
    Var embeddings;  // [N,D]
    Var positions;   // [N,D]
    QueryRole role = QueryRole::Mask;
    int n = 0;
};

struct SalientPointConfig {
    double oversample_ratio = 3.0;
    double importance_fraction = 0.75;
    uint64_t seed = 0;
    bool grid_candidates = false;  // candidates = every pixel center instead of uniform draws
};

// Selected sample points with their saliency scores, exposed for testing.
struct SalientSelection {
    Tensor coords;  // [k,2] normalized (x,y)
    std::vector<double> scores;
};

// Scores candidate points by |activation| and keeps the top
// floor(importance_fraction*k) plus uniformly random extras, deduplicating
// coordinates. Ties break by (y,x) row-major order.
SalientSelection select_salient_points(const Tensor& activation /*[1,H,W]*/, int k,
                                       const SalientPointConfig& cfg);

// Mask queries from salient activation points (Eq. 2 style) and boundary
// queries from learned tables.
class QueryInit {
public:
    QueryInit() = default;
    QueryInit(ParamStore& ps, const std::string& prefix, const ModelConfig& cfg, Rng& rng);

    // Per-level 1-channel convs, bilinear resize to level-2 size, summed.
    Var integrate_levels(const FeaturePyramid& mask_pyramid) const;

    // Salient-point mask queries; embeddings gather (bilinear) from the
    // level-2 feature map, positions are sine encodings of the coordinates.
    QuerySet sample_salient_points(const Var& activation, const Var& level2_feature, int k,
                                   const SalientPointConfig& cfg) const;

    // Learned-table queries (content independent).
    QuerySet table_queries(QueryRole role) const;

    // Strategy dispatch used by the model. seed feeds the salient sampler.
    QuerySet mask_queries(const FeaturePyramid& mask_pyramid, uint64_t seed) const;
    QuerySet boundary_queries(const FeaturePyramid& mask_pyramid, uint64_t seed) const;

private:
    ModelConfig cfg_;
    std::vector<Conv2d> integrate_;
    Var mask_embed_, mask_pos_;          // present when init_mask == Random
    Var boundary_embed_, boundary_pos_;  // present when init_boundary == Random
};

// Standalone learned-table initializer used by the Random strategy: a fresh
// table drawn from N(0, 0.02^2) for embeddings and positions.
QuerySet init_boundary_queries(ParamStore& ps, const std::string& prefix, int n, int d, uint64_t seed);

}  // namespace camoseg::model
