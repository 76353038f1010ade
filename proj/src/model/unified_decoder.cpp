#include "camoseg/model/unified_decoder.hpp"

#include "camoseg/nn/posenc.hpp"

namespace camoseg::model {

namespace ops = nn::ops;
using nn::constant;

DecoderStage::DecoderStage(ParamStore& ps, const std::string& prefix, const DecoderConfig& cfg, Rng& rng)
    : cfg_(cfg) {
    mask_proj_ = Conv2d(ps, prefix + ".mask_proj", cfg.embed_dim, cfg.embed_dim, 1, 1, 0, rng);
    boundary_proj_ = Conv2d(ps, prefix + ".boundary_proj", cfg.embed_dim, cfg.embed_dim, 1, 1, 0, rng);
    mask_level_embed_ = ps.create(prefix + ".mask_level_embed", nn::init::normal(rng, {cfg.embed_dim}, 0.0, 0.02));
    boundary_level_embed_ =
        ps.create(prefix + ".boundary_level_embed", nn::init::normal(rng, {cfg.embed_dim}, 0.0, 0.02));
    for (int i = 0; i < cfg.mask_ca_layers; ++i)
        mask_ca_.emplace_back(ps, prefix + ".mask_ca" + std::to_string(i), cfg.embed_dim, cfg.num_heads, rng);
    for (int i = 0; i < cfg.boundary_ca_layers; ++i)
        boundary_ca_.emplace_back(ps, prefix + ".boundary_ca" + std::to_string(i), cfg.embed_dim, cfg.num_heads, rng);
    self_attn_ = SelfAttentionLayer(ps, prefix + ".self_attn", cfg.embed_dim, cfg.num_heads, rng);
    ffn_ = FeedForwardLayer(ps, prefix + ".ffn", cfg.embed_dim, cfg.ffn_dim, rng);
    if (cfg.strategy == UpdateStrategy::Separation) {
        boundary_self_attn_ = SelfAttentionLayer(ps, prefix + ".boundary_self_attn", cfg.embed_dim, cfg.num_heads, rng);
        boundary_ffn_ = FeedForwardLayer(ps, prefix + ".boundary_ffn", cfg.embed_dim, cfg.ffn_dim, rng);
    }
}

namespace {
std::pair<Var, Var> prepare_tokens(const Conv2d& proj, const Var& level_embed, const Var& feature, int dim) {
    const int h = feature->value.dim(1), w = feature->value.dim(2);
    Var tokens = ops::add(ops::chw_to_tokens(proj.forward(feature)), ops::broadcast_rows(level_embed, h * w));
    Var pos = constant(nn::sine_embed_grid(h, w, dim));
    return {tokens, pos};
}
}  // namespace

std::pair<Var, Var> DecoderStage::prepare_mask_tokens(const Var& feature) const {
    return prepare_tokens(mask_proj_, mask_level_embed_, feature, cfg_.embed_dim);
}

std::pair<Var, Var> DecoderStage::prepare_boundary_tokens(const Var& feature) const {
    return prepare_tokens(boundary_proj_, boundary_level_embed_, feature, cfg_.embed_dim);
}

Var DecoderStage::run_mask_cross_attention(const Var& q, const Var& pos_q, const Var& tokens,
                                           const Var& pos_t) const {
    Var x = q;
    for (const auto& layer : mask_ca_) x = layer.forward(x, tokens, pos_q, pos_t);
    return x;
}

Var DecoderStage::run_boundary_cross_attention(const Var& q, const Var& pos_q, const Var& tokens,
                                               const Var& pos_t) const {
    Var x = q;
    for (const auto& layer : boundary_ca_) x = layer.forward(x, tokens, pos_q, pos_t);
    return x;
}

QuerySet DecoderStage::compose_and_refine(const QuerySet& refined_mask, const QuerySet& refined_boundary) const {
    check_contract(refined_mask.embeddings->value.same_shape(refined_boundary.embeddings->value),
                   "compose_and_refine: query sets must be shape-congruent");
    QuerySet out;
    out.role = QueryRole::Composed;
    out.n = refined_mask.n;
    Var combined = ops::add(refined_mask.embeddings, refined_boundary.embeddings);
    out.embeddings = ffn_.forward(self_attn_.forward(combined));
    out.positions = refined_mask.positions;
    return out;
}

DecoderStageOutput DecoderStage::forward(const QuerySet& mask_q, const QuerySet& boundary_q,
                                         const Var& mask_feature, const Var& boundary_feature,
                                         int scale_index) const {
    auto [mask_tokens, mask_pos] = prepare_mask_tokens(mask_feature);
    auto [bd_tokens, bd_pos] = prepare_boundary_tokens(boundary_feature);

    DecoderStageOutput out;
    out.scale_index = scale_index;

    switch (cfg_.strategy) {
        case UpdateStrategy::Composed: {
            out.refined_mask = mask_q;
            out.refined_mask.embeddings =
                run_mask_cross_attention(mask_q.embeddings, mask_q.positions, mask_tokens, mask_pos);
            out.refined_boundary = boundary_q;
            out.refined_boundary.embeddings =
                run_boundary_cross_attention(boundary_q.embeddings, boundary_q.positions, bd_tokens, bd_pos);
            out.composed = compose_and_refine(out.refined_mask, out.refined_boundary);
            break;
        }
        case UpdateStrategy::Separation: {
            // Streams never sum; each refines with its own self-attention/FFN.
            out.refined_mask = mask_q;
            out.refined_mask.embeddings = ffn_.forward(self_attn_.forward(
                run_mask_cross_attention(mask_q.embeddings, mask_q.positions, mask_tokens, mask_pos)));
            out.refined_boundary = boundary_q;
            out.refined_boundary.embeddings = boundary_ffn_.forward(boundary_self_attn_.forward(
                run_boundary_cross_attention(boundary_q.embeddings, boundary_q.positions, bd_tokens, bd_pos)));
            out.composed = out.refined_mask;
            out.composed.role = QueryRole::Composed;
            break;
        }
        case UpdateStrategy::Sharing: {
            // One query set serves both tasks; it visits both token streams.
            Var q = run_mask_cross_attention(mask_q.embeddings, mask_q.positions, mask_tokens, mask_pos);
            q = run_boundary_cross_attention(q, mask_q.positions, bd_tokens, bd_pos);
            QuerySet shared = mask_q;
            shared.embeddings = ffn_.forward(self_attn_.forward(q));
            out.refined_mask = shared;
            out.refined_boundary = shared;
            out.refined_boundary.role = QueryRole::Boundary;
            out.composed = shared;
            out.composed.role = QueryRole::Composed;
            break;
        }
    }
    return out;
}

UnifiedDecoder::UnifiedDecoder(ParamStore& ps, const std::string& prefix, const DecoderConfig& cfg, Rng& rng)
    : cfg_(cfg) {
    if (cfg.scales.empty()) throw ConfigError("decoder scales must not be empty");
    for (size_t i = 0; i < cfg.scales.size(); ++i)
        stages_.emplace_back(ps, prefix + ".stage" + std::to_string(i), cfg, rng);
}

std::vector<DecoderStageOutput> UnifiedDecoder::decode(const FeaturePyramid& mask_pyramid,
                                                       const FeaturePyramid& boundary_pyramid,
                                                       const QuerySet& mask_q0,
                                                       const QuerySet& boundary_q0) const {
    std::vector<DecoderStageOutput> outputs;
    QuerySet mask_q = mask_q0;
    QuerySet boundary_q = boundary_q0;
    if (cfg_.strategy == UpdateStrategy::Sharing) {
        // Sharing initializes boundary queries as a copy of the mask queries
        // and keeps a single set from then on.
        boundary_q = mask_q0;
        boundary_q.role = QueryRole::Boundary;
    }
    for (size_t i = 0; i < cfg_.scales.size(); ++i) {
        const int scale = cfg_.scales[i];
        const int stride = FeaturePyramid::stride_of_scale(scale);
        const Var& mf = mask_pyramid.by_stride(stride).feature;
        const Var& bf = boundary_pyramid.by_stride(stride).feature;
        DecoderStageOutput stage = stages_[i].forward(mask_q, boundary_q, mf, bf, scale);
        // Next stage: mask queries from the combined queries, boundary
        // queries from the previous boundary queries.
        mask_q = stage.composed;
        mask_q.role = QueryRole::Mask;
        boundary_q = stage.refined_boundary;
        outputs.push_back(std::move(stage));
    }
    return outputs;
}

}  // namespace camoseg::model
