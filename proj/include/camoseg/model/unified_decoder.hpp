#pragma once

#include "camoseg/model/query_init.hpp"

namespace camoseg::model {

using nn::CrossAttentionLayer;
using nn::SelfAttentionLayer;

struct DecoderConfig {
    std::vector<int> scales = {4, 3, 2};
    int mask_ca_layers = 2;
    int boundary_ca_layers = 1;
    UpdateStrategy strategy = UpdateStrategy::Composed;
    int embed_dim = 64;
    int num_heads = 8;
    int ffn_dim = 256;
};

struct DecoderStageOutput {
    QuerySet composed;
    QuerySet refined_mask;
    QuerySet refined_boundary;
    int scale_index = 0;
};

// One cascade step: mask queries cross-attend mask tokens (two layers),
// boundary queries cross-attend boundary tokens (one layer), the streams sum
// into a composed query refined by self-attention + FFN. Separation keeps the
// streams apart with their own refinement; sharing runs a single query set
// through both cross-attentions.
class DecoderStage {
public:
    DecoderStage() = default;
    DecoderStage(ParamStore& ps, const std::string& prefix, const DecoderConfig& cfg, Rng& rng);

    // 1x1 conv + flatten + level embedding; sine positions returned separately.
    std::pair<Var, Var> prepare_mask_tokens(const Var& feature) const;
    std::pair<Var, Var> prepare_boundary_tokens(const Var& feature) const;

    Var run_mask_cross_attention(const Var& q, const Var& pos_q, const Var& tokens, const Var& pos_t) const;
    Var run_boundary_cross_attention(const Var& q, const Var& pos_q, const Var& tokens, const Var& pos_t) const;

    // Eq.-5 style composition: sum, self-attention, feed-forward.
    QuerySet compose_and_refine(const QuerySet& refined_mask, const QuerySet& refined_boundary) const;

    DecoderStageOutput forward(const QuerySet& mask_q, const QuerySet& boundary_q,
                               const Var& mask_feature, const Var& boundary_feature, int scale_index) const;

    const std::vector<CrossAttentionLayer>& mask_ca() const { return mask_ca_; }

private:
    DecoderConfig cfg_;
    Conv2d mask_proj_, boundary_proj_;
    Var mask_level_embed_, boundary_level_embed_;
    std::vector<CrossAttentionLayer> mask_ca_, boundary_ca_;
    SelfAttentionLayer self_attn_;
    FeedForwardLayer ffn_;
    // Separation strategy refines the boundary stream with its own blocks.
    SelfAttentionLayer boundary_self_attn_;
    FeedForwardLayer boundary_ffn_;
};

class UnifiedDecoder {
public:
    UnifiedDecoder() = default;
    UnifiedDecoder(ParamStore& ps, const std::string& prefix, const DecoderConfig& cfg, Rng& rng);

    // Cascades over cfg.scales. Mask queries propagate as the composed
    // output; boundary queries propagate as the refined boundary queries.
    std::vector<DecoderStageOutput> decode(const FeaturePyramid& mask_pyramid,
                                           const FeaturePyramid& boundary_pyramid,
                                           const QuerySet& mask_q0, const QuerySet& boundary_q0) const;

    const DecoderConfig& config() const { return cfg_; }
    const DecoderStage& stage(int i) const { return stages_[static_cast<size_t>(i)]; }

private:
    DecoderConfig cfg_;
    std::vector<DecoderStage> stages_;
};

}  // namespace camoseg::model
