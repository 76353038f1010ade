#pragma once

#include "camoseg/data/eval_ap.hpp"
#include "camoseg/harness/train.hpp"

namespace camoseg::harness {

struct EvalResult {
    data::APReport report;
    std::vector<data::PredictionRecord> predictions;
};

// Forward + assembly + class-agnostic AP over a dataset.
EvalResult evaluate_model(const model::Model& m, const Dataset& ds, uint64_t seed);

// CLI-facing eval: loads the checkpoint (fingerprint-guarded), evaluates the
// requested split, and writes report.json plus predictions.json into out_dir.
EvalResult eval_run(const RunConfig& cfg, const std::string& checkpoint_path, const std::string& split,
                    const std::string& out_dir);

void write_report_json(const std::string& path, const data::APReport& report);
data::APReport read_report_json(const std::string& path);

}  // namespace camoseg::harness
