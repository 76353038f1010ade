#include "camoseg/model/model.hpp"

namespace camoseg::model {

Model::Model(ParamStore& ps, const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.validate();
    features_ = FeatureExtractor(ps, cfg, rng);
    boundary_ = BoundaryBranch(ps, "boundary", cfg.embed_dim, cfg.needs_level1() ? 4 : 3, rng);
    query_init_ = QueryInit(ps, "query_init", cfg, rng);
    DecoderConfig dc;
    dc.scales = cfg.scales;
    dc.mask_ca_layers = cfg.mask_ca_layers;
    dc.boundary_ca_layers = cfg.boundary_ca_layers;
    dc.strategy = cfg.update_strategy;
    dc.embed_dim = cfg.embed_dim;
    dc.num_heads = cfg.num_heads;
    dc.ffn_dim = cfg.ffn_dim();
    decoder_ = UnifiedDecoder(ps, "decoder", dc, rng);
    heads_ = MultitaskHeads(ps, "heads", cfg.backbone_channels[0], cfg.embed_dim, rng);
    if (cfg.needs_level1())
        level1_proj_ = Conv2d(ps, "level1_proj", cfg.backbone_channels[0], cfg.embed_dim, 1, 1, 0, rng);
}

ForwardResult Model::forward(const Tensor& image, uint64_t seed) const {
    ForwardResult r;
    r.backbone = features_.extract_multiscale(image);
    FeaturePyramid projected = features_.project(r.backbone);
    FeaturePyramid encoded = features_.encode_transformer(projected);

    // The decoder pyramid holds X_m per scale; the stride-4 level bypasses the
    // encoder and joins only when a decoder stage asks for it.
    r.mask_features.image_h = encoded.image_h;
    r.mask_features.image_w = encoded.image_w;
    if (cfg_.needs_level1())
        r.mask_features.levels.push_back({4, level1_proj_.forward(r.backbone.by_stride(4).feature)});
    for (const auto& l : encoded.levels) r.mask_features.levels.push_back(l);

    r.boundary_features = boundary_.apply(r.mask_features);

    QuerySet mask_q = query_init_.mask_queries(encoded, seed);
    QuerySet boundary_q = query_init_.boundary_queries(encoded, seed);
    r.query_stages = decoder_.decode(r.mask_features, r.boundary_features, mask_q, boundary_q);

    r.hr = heads_.high_res_features(r.backbone.by_stride(4).feature, encoded.by_stride(8).feature);
    for (size_t s = 0; s < r.query_stages.size(); ++s) {
        const auto& st = r.query_stages[s];
        // Composed strategies decode every task from the composed query;
        // separation reads the boundary map from its own stream.
        const QuerySet& loc_mask_q = st.composed;
        const QuerySet& bd_q =
            cfg_.update_strategy == UpdateStrategy::Separation ? st.refined_boundary : st.composed;
        r.stages.push_back(heads_.predict(loc_mask_q, bd_q, r.hr, static_cast<int>(s)));
    }
    return r;
}

nn::Checkpoint snapshot_params(const ParamStore& ps, const ModelConfig& cfg) {
    nn::Checkpoint c;
    c.fingerprint = cfg.fingerprint();
    for (const auto& [name, p] : ps.all()) c.tensors.emplace(name, p->value);
    return c;
}

void restore_params(ParamStore& ps, const nn::Checkpoint& ckpt) {
    for (const auto& [name, p] : ps.all()) {
        auto it = ckpt.tensors.find(name);
        check_input(it != ckpt.tensors.end(), "checkpoint missing parameter: " + name);
        check_input(it->second.shape == p->value.shape, "checkpoint shape mismatch for " + name);
        p->value = it->second;
    }
}

}  // namespace camoseg::model
