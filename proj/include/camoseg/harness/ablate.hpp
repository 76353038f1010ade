#pragma once

#include "camoseg/data/eval_ap.hpp"
#include "camoseg/harness/config.hpp"

namespace camoseg::harness {

struct SweepVariant {
    std::string name;
    // key=value pairs applied on top of the base config, in order.
    std::vector<std::pair<std::string, std::string>> overrides;
};

struct SweepConfig {
    std::string name;
    std::string base_config_path;
    std::vector<SweepVariant> variants;  // row order of the emitted table
};

// Sweep file format:
//   name = queries_update
//   base = desk.cfg                  # relative to the sweep file
//   variant.separation = model.update_strategy=separation
//   variant.loss_a05_b1 = loss.alpha=0.5; loss.beta=1
SweepConfig parse_sweep_file(const std::string& path);

struct AblateRow {
    std::string name;
    std::string axis;  // sweep-specific leading column (features, A/B codes, weights)
    int64_t param_count = 0;
    data::APReport report;
    double final_loss = 0.0;
};

struct AblateResult {
    std::vector<AblateRow> rows;
    std::string table_path;
    std::string out_dir;
};

// Trains every variant from scratch with the shared seed, evaluates the val
// split, renders per-variant loss curves, and writes table.txt in the row
// structure of the corresponding ablation table.
AblateResult run_sweep(const SweepConfig& sweep, const std::string& out_dir);

std::string format_table(const std::string& sweep_name, const std::vector<AblateRow>& rows);

}  // namespace camoseg::harness
