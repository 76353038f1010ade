#pragma once

#include "camoseg/model/query_init.hpp"

namespace camoseg::model {

using nn::Mlp;

struct HighResFeatures {
    Var mask_hr;      // [D,H/4,W/4]
    Var boundary_hr;  // [D,H/4,W/4]
};

struct InstancePredictionSet {
    Var location_logits;  // [N]
    Var mask_logits;      // [N,H/4,W/4]
    Var boundary_logits;  // [N,H/4,W/4]
    int stage_index = 0;
};

struct InstanceDetection {
    Tensor mask;  // binary [H,W] at image resolution
    double score = 0.0;
    int query_index = -1;
};

// Location/mask/boundary prediction heads shared across decoder stages.
class MultitaskHeads {
public:
    MultitaskHeads() = default;
    MultitaskHeads(ParamStore& ps, const std::string& prefix, int backbone_c1, int dim, Rng& rng);

    // X_en = conv(X_e^1) + 2x-upsample(X_m^2); two convs split it into the
    // high-resolution mask and boundary feature maps.
    HighResFeatures high_res_features(const Var& backbone_level1, const Var& encoded_level2) const;

    Var predict_location(const QuerySet& q) const;                      // [N]
    Var predict_mask(const QuerySet& q, const Var& mask_hr) const;      // [N,h,w]
    Var predict_boundary(const QuerySet& q, const Var& bd_hr) const;    // [N,h,w]

    InstancePredictionSet predict(const QuerySet& location_mask_q, const QuerySet& boundary_q,
                                  const HighResFeatures& hr, int stage_index) const;

private:
    Conv2d en_proj_, mask_hr_conv_, boundary_hr_conv_;
    nn::Linear location_head_;
    Mlp mask_mlp_, boundary_mlp_;
};

// Thresholded instance list from the final stage, no NMS. Masks upsample
// bilinearly to image resolution before binarizing; ranking score is the
// location probability times the mean in-mask probability.
std::vector<InstanceDetection> assemble_predictions(const InstancePredictionSet& final_stage,
                                                    double score_threshold, double mask_threshold,
                                                    int image_h, int image_w);

}  // namespace camoseg::model
