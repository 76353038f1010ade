#pragma once

#include "camoseg/model/boundary_branch.hpp"
#include "camoseg/model/multitask_heads.hpp"
#include "camoseg/model/unified_decoder.hpp"
#include "camoseg/nn/checkpoint.hpp"

namespace camoseg::model {

struct ForwardResult {
    FeaturePyramid backbone;       // raw CNN levels, strides 4..32
    FeaturePyramid mask_features;  // encoder output (X_m), plus level 1 when decoded
    FeaturePyramid boundary_features;
    HighResFeatures hr;
    std::vector<DecoderStageOutput> query_stages;
    std::vector<InstancePredictionSet> stages;  // one per decoder stage, deep supervision
    const InstancePredictionSet& final_stage() const { return stages.back(); }
};

// Full pipeline: backbone -> deformable encoder -> boundary branch -> query
// init -> unified decoder -> multitask heads.
class Model {
public:
    Model(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

    // seed drives the salient-point sampling; deterministic per (image,seed).
    ForwardResult forward(const Tensor& image, uint64_t seed) const;

    const ModelConfig& config() const { return cfg_; }
    const FeatureExtractor& feature_extractor() const { return features_; }
    const BoundaryBranch& boundary_branch() const { return boundary_; }
    const QueryInit& query_init() const { return query_init_; }
    const UnifiedDecoder& decoder() const { return decoder_; }
    const MultitaskHeads& heads() const { return heads_; }

private:
    ModelConfig cfg_;
    FeatureExtractor features_;
    BoundaryBranch boundary_;
    QueryInit query_init_;
    UnifiedDecoder decoder_;
    MultitaskHeads heads_;
    Conv2d level1_proj_;  // only built when the decoder consumes scale 1
};

// Checkpoint glue: model parameters as a flat map guarded by the config
// fingerprint.
nn::Checkpoint snapshot_params(const ParamStore& ps, const ModelConfig& cfg);
void restore_params(ParamStore& ps, const nn::Checkpoint& ckpt);

}  // namespace camoseg::model
