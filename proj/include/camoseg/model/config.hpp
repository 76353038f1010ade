#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace camoseg::model {

// Query update strategies compared in the ablation: the composed update sums
// refined mask and boundary queries; separation keeps two independent
// streams; sharing runs one query set through both cross-attentions.
enum class UpdateStrategy { Composed, Separation, Sharing };

// Query initialization: Salient picks high-activation feature points,
// Random draws a learned embedding table.
enum class InitStrategy { Salient, Random };

std::string to_string(UpdateStrategy s);
std::string to_string(InitStrategy s);
UpdateStrategy update_strategy_from_string(const std::string& s);
InitStrategy init_strategy_from_string(const std::string& s);

struct ModelConfig {
    int embed_dim = 64;
    int num_heads = 8;
    int num_queries = 20;
    int encoder_layers = 6;
    int encoder_points = 4;  // sampling points per level per head
    int ffn_multiplier = 4;
    std::vector<int> backbone_channels = {32, 64, 128, 256};
    std::vector<int> scales = {4, 3, 2};  // decoder cascade, coarse to fine
    int mask_ca_layers = 2;
    int boundary_ca_layers = 1;
    UpdateStrategy update_strategy = UpdateStrategy::Composed;
    InitStrategy init_mask = InitStrategy::Salient;
    InitStrategy init_boundary = InitStrategy::Random;
    double salient_oversample = 3.0;
    double salient_importance = 0.75;
    double score_threshold = 0.5;
    double mask_threshold = 0.5;

    int ffn_dim() const { return embed_dim * ffn_multiplier; }
    bool needs_level1() const;
    void validate() const;
    // Canonical text form; its hash is the checkpoint fingerprint.
    std::string canonical() const;
    uint64_t fingerprint() const;
};

}  // namespace camoseg::model
