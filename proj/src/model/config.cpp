#include "camoseg/model/config.hpp"

#include <algorithm>
#include <sstream>

#include "camoseg/error.hpp"
#include "camoseg/nn/checkpoint.hpp"

namespace camoseg::model {

std::string to_string(UpdateStrategy s) {
    switch (s) {
        case UpdateStrategy::Composed: return "composed";
        case UpdateStrategy::Separation: return "separation";
        case UpdateStrategy::Sharing: return "sharing";
    }
    return "composed";
}

std::string to_string(InitStrategy s) {
    return s == InitStrategy::Salient ? "salient" : "random";
}

UpdateStrategy update_strategy_from_string(const std::string& s) {
    if (s == "composed") return UpdateStrategy::Composed;
    if (s == "separation") return UpdateStrategy::Separation;
    if (s == "sharing") return UpdateStrategy::Sharing;
    throw ConfigError("unknown update strategy: " + s);
}

InitStrategy init_strategy_from_string(const std::string& s) {
    // "A"/"B" are the ablation-table codes.
    if (s == "salient" || s == "A" || s == "a") return InitStrategy::Salient;
    if (s == "random" || s == "B" || s == "b") return InitStrategy::Random;
    throw ConfigError("unknown init strategy: " + s);
}

bool ModelConfig::needs_level1() const {
    return std::find(scales.begin(), scales.end(), 1) != scales.end();
}

void ModelConfig::validate() const {
    if (embed_dim <= 0 || embed_dim % num_heads != 0)
        throw ConfigError("model.embed_dim must be positive and divisible by model.num_heads");
    if (num_queries <= 0) throw ConfigError("model.num_queries must be positive");
    if (encoder_layers < 1) throw ConfigError("model.encoder_layers must be >= 1");
    if (backbone_channels.size() != 4) throw ConfigError("model.backbone_channels needs 4 entries");
    if (scales.empty()) throw ConfigError("model.scales must not be empty");
    for (int s : scales)
        if (s < 1 || s > 4) throw ConfigError("model.scales entries must be in 1..4");
    if (salient_oversample < 1.0) throw ConfigError("model.salient_oversample must be >= 1");
    if (salient_importance < 0.0 || salient_importance > 1.0)
        throw ConfigError("model.salient_importance must be in [0,1]");
}

std::string ModelConfig::canonical() const {
    std::ostringstream os;
    os << "embed_dim=" << embed_dim << ";heads=" << num_heads << ";queries=" << num_queries
       << ";enc_layers=" << encoder_layers << ";enc_points=" << encoder_points
       << ";ffn_mult=" << ffn_multiplier << ";backbone=";
    for (size_t i = 0; i < backbone_channels.size(); ++i) os << (i ? "," : "") << backbone_channels[i];
    os << ";scales=";
    for (size_t i = 0; i < scales.size(); ++i) os << (i ? "," : "") << scales[i];
    os << ";mask_ca=" << mask_ca_layers << ";boundary_ca=" << boundary_ca_layers
       << ";update=" << to_string(update_strategy) << ";init_mask=" << to_string(init_mask)
       << ";init_boundary=" << to_string(init_boundary);
    return os.str();
}

uint64_t ModelConfig::fingerprint() const { return nn::fnv1a64(canonical()); }

}  // namespace camoseg::model
