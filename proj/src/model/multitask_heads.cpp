#include "camoseg/model/multitask_heads.hpp"

#include <cmath>

#include "camoseg/nn/kernels.hpp"

namespace camoseg::model {

namespace ops = nn::ops;

MultitaskHeads::MultitaskHeads(ParamStore& ps, const std::string& prefix, int backbone_c1, int dim, Rng& rng) {
    en_proj_ = Conv2d(ps, prefix + ".en_proj", backbone_c1, dim, 1, 1, 0, rng);
    mask_hr_conv_ = Conv2d(ps, prefix + ".mask_hr", dim, dim, 1, 1, 0, rng);
    boundary_hr_conv_ = Conv2d(ps, prefix + ".boundary_hr", dim, dim, 1, 1, 0, rng);
    location_head_ = nn::Linear(ps, prefix + ".location", dim, 1, rng);
    mask_mlp_ = Mlp(ps, prefix + ".mask_mlp", dim, dim, dim, 3, rng);
    boundary_mlp_ = Mlp(ps, prefix + ".boundary_mlp", dim, dim, dim, 3, rng);
}

HighResFeatures MultitaskHeads::high_res_features(const Var& backbone_level1, const Var& encoded_level2) const {
    const int h1 = backbone_level1->value.dim(1), w1 = backbone_level1->value.dim(2);
    const int h2 = encoded_level2->value.dim(1), w2 = encoded_level2->value.dim(2);
    check_contract(h1 == 2 * h2 && w1 == 2 * w2,
                   "high_res_features: expected stride-4 and stride-8 inputs");
    Var en = ops::add(en_proj_.forward(backbone_level1), ops::bilinear_resize(encoded_level2, h1, w1));
    return {mask_hr_conv_.forward(en), boundary_hr_conv_.forward(en)};
}

Var MultitaskHeads::predict_location(const QuerySet& q) const {
    return ops::reshape(location_head_.forward(q.embeddings), {q.n});
}

namespace {
Var query_map_product(const Mlp& mlp, const QuerySet& q, const Var& feature) {
    const int d = feature->value.dim(0), h = feature->value.dim(1), w = feature->value.dim(2);
    // Per-pixel channel dot product between the transformed query vectors and
    // the feature map, i.e. [N,D] x [D,H*W].
    Var weights = mlp.forward(q.embeddings);
    Var flat = ops::reshape(feature, {d, h * w});
    return ops::reshape(ops::matmul(weights, flat), {q.n, h, w});
}
}  // namespace

Var MultitaskHeads::predict_mask(const QuerySet& q, const Var& mask_hr) const {
    return query_map_product(mask_mlp_, q, mask_hr);
}

Var MultitaskHeads::predict_boundary(const QuerySet& q, const Var& bd_hr) const {
    return query_map_product(boundary_mlp_, q, bd_hr);
}

InstancePredictionSet MultitaskHeads::predict(const QuerySet& location_mask_q, const QuerySet& boundary_q,
                                              const HighResFeatures& hr, int stage_index) const {
    InstancePredictionSet out;
    out.stage_index = stage_index;
    out.location_logits = predict_location(location_mask_q);
    out.mask_logits = predict_mask(location_mask_q, hr.mask_hr);
    out.boundary_logits = predict_boundary(boundary_q, hr.boundary_hr);
    return out;
}

std::vector<InstanceDetection> assemble_predictions(const InstancePredictionSet& final_stage,
                                                    double score_threshold, double mask_threshold,
                                                    int image_h, int image_w) {
    const Tensor& loc = final_stage.location_logits->value;
    const Tensor& masks = final_stage.mask_logits->value;
    const int n = loc.dim(0);
    const int h = masks.dim(1), w = masks.dim(2);
    std::vector<InstanceDetection> out;
    for (int i = 0; i < n; ++i) {
        const double p_loc = 1.0 / (1.0 + std::exp(-loc[i]));
        if (p_loc < score_threshold) continue;
        Tensor logit({1, h, w});
        std::copy(masks.v.begin() + static_cast<int64_t>(i) * h * w,
                  masks.v.begin() + static_cast<int64_t>(i + 1) * h * w, logit.v.begin());
        Tensor up({1, image_h, image_w});
        nn::kernels::bilinear_resize_forward(logit.data(), up.data(), 1, h, w, image_h, image_w);
        InstanceDetection det;
        det.query_index = i;
        det.mask = Tensor({image_h, image_w});
        double prob_sum = 0.0;
        int64_t in_mask = 0;
        for (int64_t p = 0; p < static_cast<int64_t>(image_h) * image_w; ++p) {
            const double prob = 1.0 / (1.0 + std::exp(-up[p]));
            if (prob >= mask_threshold) {
                det.mask[p] = 1.0;
                prob_sum += prob;
                ++in_mask;
            }
        }
        const double mask_conf = in_mask > 0 ? prob_sum / static_cast<double>(in_mask) : 0.0;
        det.score = p_loc * mask_conf;
        out.push_back(std::move(det));
    }
    return out;
}

}  // namespace camoseg::model
