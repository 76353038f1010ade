#pragma once

#include "camoseg/model/config.hpp"
#include "camoseg/nn/layers.hpp"

namespace camoseg::model {

using nn::Conv2d;
using nn::FeedForwardLayer;
using nn::LayerNorm;
using nn::Linear;
using nn::ParamStore;
using nn::Rng;
using nn::Tensor;
using nn::Var;

// Multi-scale pyramid. Strides increase 4/8/16/32; image_h/w are the padded
// input dimensions.
struct FeaturePyramid {
    struct Level {
        int stride;
        Var feature;  // [C,H,W]
    };
    std::vector<Level> levels;
    int image_h = 0, image_w = 0;

    const Level& by_stride(int s) const;
    static int stride_of_scale(int scale_index) { return 1 << (scale_index + 1); }  // scale i -> 2^(i+1)
};

struct EncoderConfig {
    int num_layers = 6;
    int num_heads = 8;
    int num_sampling_points = 4;
    int embed_dim = 64;
    int ffn_dim = 256;
};

// Four-stage CNN: stem stride 4, then three stride-2 stages. Channel widths
// come from the model config; a pretrained backbone can be slotted in by
// replacing this block behind extract().
class Backbone {
public:
    Backbone() = default;
    Backbone(ParamStore& ps, const std::string& prefix, const std::vector<int>& channels, Rng& rng);
    // image [3,H,W]; pads H,W up to multiples of 32 with zeros.
    FeaturePyramid extract(const Tensor& image) const;

private:
    Conv2d stem_;
    std::vector<Conv2d> stage_a_, stage_b_;
    std::vector<int> channels_;
};

struct LevelShape {
    int h = 0, w = 0;
};

struct TokenMeta {
    int level = 0;  // index into the encoded levels (0 = stride 8)
    int cell = 0;   // row-major cell in that level
    double ref_x = 0.0, ref_y = 0.0;
};

struct TokenBatch {
    Var tokens;                    // [T,D]
    Var pos;                       // [T,D], sine + level embedding
    std::vector<TokenMeta> metas;  // one per row
    std::vector<LevelShape> shapes;
};

// Multi-scale deformable attention (sampling-offset attention over the value
// pyramid). Offsets and weights are predicted from the query; weights softmax
// over levels x points per head.
struct DeformableAttention {
    Linear offset_proj, weight_proj, value_proj, out_proj;
    int heads = 8, points = 4, levels = 3;
    mutable Tensor last_weights;  // [Q, heads*levels*points] post-softmax

    DeformableAttention() = default;
    DeformableAttention(ParamStore& ps, const std::string& prefix, int dim, int heads, int levels,
                        int points, Rng& rng);
    // q: query content + positions [Q,D]; content: token features the values
    // are projected from [T,D]; ref: [Q,2] normalized reference points.
    Var forward(const Var& q, const Var& content, const std::vector<TokenMeta>& metas,
                const std::vector<LevelShape>& shapes, const Tensor& ref) const;
};

class TransformerEncoder {
public:
    TransformerEncoder() = default;
    TransformerEncoder(ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg,
                       const std::vector<int>& in_channels, Rng& rng);

    // 1x1-projects backbone levels (strides 8/16/32) to embed_dim.
    FeaturePyramid project(const FeaturePyramid& backbone) const;
    // Flattens a projected pyramid into tokens with positions and metadata.
    TokenBatch build_tokens(const FeaturePyramid& projected) const;
    // Runs the layer stack on an arbitrary token ordering.
    Var encode_tokens(const TokenBatch& batch) const;
    // project() is a precondition here: levels must already be at embed_dim.
    FeaturePyramid encode(const FeaturePyramid& projected) const;

    const EncoderConfig& config() const { return cfg_; }

    struct Layer {
        LayerNorm norm1;
        DeformableAttention attn;
        FeedForwardLayer ffn;
    };
    const std::vector<Layer>& layers() const { return layers_; }

private:
    EncoderConfig cfg_;
    std::vector<Conv2d> input_proj_;
    std::vector<Var> level_embed_;
    std::vector<Layer> layers_;
};

// feature_extractor module facade: backbone pyramid, projection, encoder.
class FeatureExtractor {
public:
    FeatureExtractor() = default;
    FeatureExtractor(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

    FeaturePyramid extract_multiscale(const Tensor& image) const { return backbone_.extract(image); }
    FeaturePyramid project(const FeaturePyramid& p) const { return encoder_.project(p); }
    FeaturePyramid encode_transformer(const FeaturePyramid& projected) const { return encoder_.encode(projected); }

    const Backbone& backbone() const { return backbone_; }
    const TransformerEncoder& encoder() const { return encoder_; }

private:
    Backbone backbone_;
    TransformerEncoder encoder_;
};

}  // namespace camoseg::model
