#pragma once

#include <string>

#include "camoseg/loss/matching.hpp"
#include "camoseg/model/config.hpp"

namespace camoseg::harness {

struct OptimConfig {
    double lr = 2.5e-4;
    int iterations = 15000;  // paper-scale default; desk profiles override
    int batch_size = 16;
    int log_every = 10;
    int checkpoint_every = 500;
    double weight_decay = 0.0;
    double max_grad_norm = 1.0;
};

struct LossConfig {
    loss::LossWeights weights;
    int point_count = 112 * 112;
    double oversample = 3.0;
    double importance_fraction = 0.75;
};

struct DataConfig {
    std::string kind = "synthetic";  // synthetic | annotations
    int image_size = 96;
    int train_images = 16;
    int val_images = 8;
    int min_instances = 1;
    int max_instances = 3;
    double contrast_bound = 0.12;
    double min_radius = 10.0;
    double max_radius = 22.0;
    int boundary_width = 2;
    std::string train_annotations;  // annotation-file mode
    std::string val_annotations;
    std::string image_dir;
};

struct RunConfig {
    uint64_t seed = 7;
    model::ModelConfig model;
    OptimConfig optimizer;
    LossConfig loss;
    DataConfig data;
    std::string out = "runs/run";

    void validate() const;
    // Full key=value snapshot; parseable by parse_config_text.
    std::string resolved() const;
};

// Plain-text hierarchical key-value config: `section.key = value` lines and
// `#` comments. Unknown keys are rejected with every offender listed.
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig parse_config_file(const std::string& path);
// Single `key=value` override (CLI flags take this path).
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// Resolves the run directory against the CAMOSEG_RUN_ROOT environment
// variable when `out` is relative.
std::string resolve_run_dir(const std::string& out);

}  // namespace camoseg::harness
