#pragma once

#include <memory>
#include <optional>

#include "camoseg/data/synth.hpp"
#include "camoseg/harness/config.hpp"
#include "camoseg/model/model.hpp"
#include "camoseg/nn/optim.hpp"

namespace camoseg::harness {

struct Dataset {
    std::vector<data::SynthSample> samples;  // images + annotation records
};

// split: "train" or "val". Synthetic splits derive disjoint seeds.
Dataset load_split(const DataConfig& cfg, uint64_t seed, const std::string& split);

loss::Targets targets_of(const data::ImageRecord& record);

// Owns the model, optimizer, dataset, and batch schedule of one training
// session. The CLI train command and the experiment harness both drive this.
class Trainer {
public:
    explicit Trainer(const RunConfig& cfg);

    // Runs one iteration and returns the batch-averaged loss terms.
    loss::LossBreakdown step();
    int iteration() const { return iteration_; }

    model::Model& model() { return *model_; }
    const model::Model& model() const { return *model_; }
    nn::ParamStore& params() { return params_; }
    nn::AdamW& optimizer() { return *opt_; }
    const Dataset& train_set() const { return train_set_; }
    const RunConfig& config() const { return cfg_; }

    nn::Checkpoint checkpoint() const;  // params + optimizer state + iteration
    void restore(const nn::Checkpoint& ckpt);

    // Deterministic per-iteration forward seed for one batch slot.
    uint64_t forward_seed(int iteration, int slot) const;

private:
    std::vector<int> next_batch();

    RunConfig cfg_;
    nn::ParamStore params_;
    std::unique_ptr<model::Model> model_;
    std::unique_ptr<nn::AdamW> opt_;
    Dataset train_set_;
    std::vector<loss::Targets> train_targets_;
    nn::Rng schedule_rng_;
    std::vector<int> pending_;  // remainder of the current epoch
    int iteration_ = 0;
};

struct TrainResult {
    std::string run_dir;
    std::string loss_csv_path;
    std::string final_checkpoint_path;
    loss::LossBreakdown final_loss;
};

// The CLI-facing train operation: creates the run directory, writes the
// resolved config snapshot, a per-iteration loss CSV, and checkpoints.
// resume_checkpoint continues a previous run of the same configuration.
TrainResult train_run(const RunConfig& cfg, const std::optional<std::string>& resume_checkpoint = {});

}  // namespace camoseg::harness
