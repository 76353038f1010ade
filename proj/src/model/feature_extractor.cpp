#include "camoseg/model/feature_extractor.hpp"

#include <cmath>

#include "camoseg/nn/posenc.hpp"

namespace camoseg::model {

namespace ops = nn::ops;
using nn::constant;

const FeaturePyramid::Level& FeaturePyramid::by_stride(int s) const {
    for (const auto& l : levels)
        if (l.stride == s) return l;
    throw ContractError("pyramid has no stride-" + std::to_string(s) + " level");
}

Backbone::Backbone(ParamStore& ps, const std::string& prefix, const std::vector<int>& channels, Rng& rng)
    : channels_(channels) {
    check_contract(channels.size() == 4, "backbone needs 4 channel widths");
    stem_ = Conv2d(ps, prefix + ".stem", 3, channels[0], 7, 4, 3, rng);
    for (int s = 0; s < 3; ++s) {
        stage_a_.emplace_back(ps, prefix + ".s" + std::to_string(s + 2) + "a",
                              channels[static_cast<size_t>(s)], channels[static_cast<size_t>(s) + 1], 3, 2, 1, rng);
        stage_b_.emplace_back(ps, prefix + ".s" + std::to_string(s + 2) + "b",
                              channels[static_cast<size_t>(s) + 1], channels[static_cast<size_t>(s) + 1], 3, 1, 1, rng);
    }
}

FeaturePyramid Backbone::extract(const Tensor& image) const {
    check_input(image.rank() == 3 && image.dim(0) == 3,
                "backbone expects a [3,H,W] image, got " + image.shape_str());
    const int H = image.dim(1), W = image.dim(2);
    const int ph = (H + 31) / 32 * 32;
    const int pw = (W + 31) / 32 * 32;
    Tensor padded = image;
    if (ph != H || pw != W) {
        padded = Tensor({3, ph, pw});
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) padded.at(c, y, x) = image.at(c, y, x);
    }
    FeaturePyramid pyr;
    pyr.image_h = ph;
    pyr.image_w = pw;
    Var x = constant(std::move(padded));
    Var f = ops::relu(stem_.forward(x));
    pyr.levels.push_back({4, f});
    for (int s = 0; s < 3; ++s) {
        f = ops::relu(stage_a_[static_cast<size_t>(s)].forward(f));
        f = ops::relu(stage_b_[static_cast<size_t>(s)].forward(f));
        pyr.levels.push_back({4 << (s + 1), f});
    }
    return pyr;
}

DeformableAttention::DeformableAttention(ParamStore& ps, const std::string& prefix, int dim, int heads_,
                                         int levels_, int points_, Rng& rng)
    : heads(heads_), points(points_), levels(levels_) {
    const int np = heads_ * levels_ * points_;
    // Offsets start at a directional ring per head and zero weight matrix so
    // early sampling is stable; attention weights start uniform.
    offset_proj = Linear(ps, prefix + ".offsets", dim, np * 2, rng);
    for (auto& v : offset_proj.w->value.v) v = 0.0;
    for (int h = 0; h < heads_; ++h) {
        const double angle = 2.0 * 3.14159265358979323846 * h / heads_;
        double dx = std::cos(angle), dy = std::sin(angle);
        const double nrm = std::max(std::abs(dx), std::abs(dy));
        dx /= nrm;
        dy /= nrm;
        for (int l = 0; l < levels_; ++l)
            for (int p = 0; p < points_; ++p) {
                const int idx = ((h * levels_ + l) * points_ + p) * 2;
                offset_proj.b->value[idx] = dx * (p + 1);
                offset_proj.b->value[idx + 1] = dy * (p + 1);
            }
    }
    weight_proj = Linear(ps, prefix + ".weights", dim, np, rng);
    for (auto& v : weight_proj.w->value.v) v = 0.0;
    for (auto& v : weight_proj.b->value.v) v = 0.0;
    value_proj = Linear(ps, prefix + ".value", dim, dim, rng);
    out_proj = Linear(ps, prefix + ".out", dim, dim, rng);
}

Var DeformableAttention::forward(const Var& q, const Var& content, const std::vector<TokenMeta>& metas,
                                 const std::vector<LevelShape>& shapes, const Tensor& ref) const {
    const int Q = q->value.dim(0);
    const int L = static_cast<int>(shapes.size());
    check_contract(L == levels, "deformable attention level count mismatch");
    Var offsets = offset_proj.forward(q);
    Var wraw = weight_proj.forward(q);
    Var weights = ops::reshape(
        ops::softmax_rows(ops::reshape(wraw, {Q * heads, L * points})), {Q, heads * L * points});
    last_weights = weights->value;

    Var values = value_proj.forward(content);
    // Scatter token rows into per-level value maps via their grid cells.
    std::vector<std::vector<int>> level_rows(static_cast<size_t>(L));
    for (int l = 0; l < L; ++l)
        level_rows[static_cast<size_t>(l)].resize(static_cast<size_t>(shapes[static_cast<size_t>(l)].h) *
                                                  shapes[static_cast<size_t>(l)].w);
    for (size_t t = 0; t < metas.size(); ++t)
        level_rows[static_cast<size_t>(metas[t].level)][static_cast<size_t>(metas[t].cell)] = static_cast<int>(t);
    std::vector<Var> value_maps;
    const int D = q->value.dim(1);
    for (int l = 0; l < L; ++l) {
        Var rows = ops::gather_rows(values, level_rows[static_cast<size_t>(l)]);
        value_maps.push_back(ops::tokens_to_chw(rows, D, shapes[static_cast<size_t>(l)].h,
                                                shapes[static_cast<size_t>(l)].w));
    }
    Var read = ops::deformable_sample(value_maps, offsets, weights, ref, heads, points);
    return out_proj.forward(read);
}

TransformerEncoder::TransformerEncoder(ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg,
                                       const std::vector<int>& in_channels, Rng& rng)
    : cfg_(cfg) {
    const int L = static_cast<int>(in_channels.size());
    for (int l = 0; l < L; ++l)
        input_proj_.emplace_back(ps, prefix + ".proj" + std::to_string(l), in_channels[static_cast<size_t>(l)],
                                 cfg.embed_dim, 1, 1, 0, rng);
    for (int l = 0; l < L; ++l)
        level_embed_.push_back(ps.create(prefix + ".level_embed" + std::to_string(l),
                                         nn::init::normal(rng, {cfg.embed_dim}, 0.0, 0.02)));
    for (int i = 0; i < cfg.num_layers; ++i) {
        const std::string lp = prefix + ".layer" + std::to_string(i);
        Layer layer;
        layer.norm1 = LayerNorm(ps, lp + ".norm1", cfg.embed_dim);
        layer.attn = DeformableAttention(ps, lp + ".attn", cfg.embed_dim, cfg.num_heads, L,
                                         cfg.num_sampling_points, rng);
        layer.ffn = FeedForwardLayer(ps, lp + ".ffn", cfg.embed_dim, cfg.ffn_dim, rng);
        layers_.push_back(std::move(layer));
    }
}

FeaturePyramid TransformerEncoder::project(const FeaturePyramid& backbone) const {
    FeaturePyramid out;
    out.image_h = backbone.image_h;
    out.image_w = backbone.image_w;
    const int strides[3] = {8, 16, 32};
    for (int l = 0; l < 3; ++l) {
        const auto& lvl = backbone.by_stride(strides[l]);
        out.levels.push_back({lvl.stride, input_proj_[static_cast<size_t>(l)].forward(lvl.feature)});
    }
    return out;
}

TokenBatch TransformerEncoder::build_tokens(const FeaturePyramid& projected) const {
    TokenBatch tb;
    std::vector<Var> tok_parts, pos_parts;
    for (size_t l = 0; l < projected.levels.size(); ++l) {
        const Var& f = projected.levels[l].feature;
        check_contract(f->value.dim(0) == cfg_.embed_dim, "encoder input must be projected to embed_dim");
        const int h = f->value.dim(1), w = f->value.dim(2);
        tb.shapes.push_back({h, w});
        tok_parts.push_back(ops::chw_to_tokens(f));
        Var pe = ops::add(constant(nn::sine_embed_grid(h, w, cfg_.embed_dim)),
                          ops::broadcast_rows(level_embed_[l], h * w));
        pos_parts.push_back(pe);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                tb.metas.push_back({static_cast<int>(l), y * w + x,
                                    (x + 0.5) / static_cast<double>(w), (y + 0.5) / static_cast<double>(h)});
    }
    tb.tokens = ops::concat_rows(tok_parts);
    tb.pos = ops::concat_rows(pos_parts);
    return tb;
}

Var TransformerEncoder::encode_tokens(const TokenBatch& batch) const {
    const int T = batch.tokens->value.dim(0);
    Tensor ref({T, 2});
    for (int t = 0; t < T; ++t) {
        ref.at(t, 0) = batch.metas[static_cast<size_t>(t)].ref_x;
        ref.at(t, 1) = batch.metas[static_cast<size_t>(t)].ref_y;
    }
    Var x = batch.tokens;
    for (const auto& layer : layers_) {
        Var h = layer.norm1.forward(x);
        Var q = ops::add(h, batch.pos);
        x = ops::add(x, layer.attn.forward(q, h, batch.metas, batch.shapes, ref));
        x = layer.ffn.forward(x);
    }
    return x;
}

FeaturePyramid TransformerEncoder::encode(const FeaturePyramid& projected) const {
    TokenBatch tb = build_tokens(projected);
    Var x = encode_tokens(tb);
    FeaturePyramid out;
    out.image_h = projected.image_h;
    out.image_w = projected.image_w;
    int off = 0;
    for (size_t l = 0; l < projected.levels.size(); ++l) {
        const int h = tb.shapes[l].h, w = tb.shapes[l].w;
        Var rows = ops::slice_rows(x, off, h * w);
        out.levels.push_back({projected.levels[l].stride, ops::tokens_to_chw(rows, cfg_.embed_dim, h, w)});
        off += h * w;
    }
    return out;
}

FeatureExtractor::FeatureExtractor(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
    backbone_ = Backbone(ps, "backbone", cfg.backbone_channels, rng);
    EncoderConfig ec;
    ec.num_layers = cfg.encoder_layers;
    ec.num_heads = cfg.num_heads;
    ec.num_sampling_points = cfg.encoder_points;
    ec.embed_dim = cfg.embed_dim;
    ec.ffn_dim = cfg.ffn_dim();
    const std::vector<int> in_ch = {cfg.backbone_channels[1], cfg.backbone_channels[2], cfg.backbone_channels[3]};
    encoder_ = TransformerEncoder(ps, "encoder", ec, in_ch, rng);
}

}  // namespace camoseg::model
