#include "camoseg/harness/train.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "camoseg/data/image_io.hpp"

namespace camoseg::harness {

namespace fs = std::filesystem;
namespace ops = nn::ops;
using nn::Rng;
using nn::Var;

Dataset load_split(const DataConfig& cfg, uint64_t seed, const std::string& split) {
    check_input(split == "train" || split == "val", "unknown split: " + split);
    Dataset ds;
    if (cfg.kind == "synthetic") {
        data::SynthConfig sc;
        sc.image_size = cfg.image_size;
        sc.min_instances = cfg.min_instances;
        sc.max_instances = cfg.max_instances;
        sc.contrast_bound = cfg.contrast_bound;
        sc.min_radius = cfg.min_radius;
        sc.max_radius = cfg.max_radius;
        sc.boundary_width = cfg.boundary_width;
        const uint64_t split_seed = Rng::derive(seed, split == "train" ? 101 : 202);
        ds.samples = data::synth_generate(sc, split_seed, split == "train" ? cfg.train_images : cfg.val_images);
        return ds;
    }
    const std::string& path = split == "train" ? cfg.train_annotations : cfg.val_annotations;
    check_input(!path.empty(), "no annotation file configured for split " + split);
    for (auto& rec : data::load_annotations(path, cfg.boundary_width)) {
        data::SynthSample s;
        s.image = data::read_ppm(cfg.image_dir + "/" + rec.image_id + ".ppm");
        s.record = std::move(rec);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

loss::Targets targets_of(const data::ImageRecord& record) {
    loss::Targets t;
    for (const auto& inst : record.instances) t.push_back({inst.mask, inst.boundary});
    return t;
}

Trainer::Trainer(const RunConfig& cfg)
    : cfg_(cfg), schedule_rng_(Rng::derive(cfg.seed, 0xb47c4ull)) {
    cfg_.validate();
    Rng init_rng(cfg_.seed);
    model_ = std::make_unique<model::Model>(params_, cfg_.model, init_rng);
    nn::AdamW::Options opt;
    opt.lr = cfg_.optimizer.lr;
    opt.weight_decay = cfg_.optimizer.weight_decay;
    opt.max_grad_norm = cfg_.optimizer.max_grad_norm;
    opt_ = std::make_unique<nn::AdamW>(opt);
    train_set_ = load_split(cfg_.data, cfg_.seed, "train");
    check_input(!train_set_.samples.empty(), "training split is empty");
    for (const auto& s : train_set_.samples) train_targets_.push_back(targets_of(s.record));
}

uint64_t Trainer::forward_seed(int iteration, int slot) const {
    return Rng::derive(cfg_.seed, 0xf0000000ull + static_cast<uint64_t>(iteration) * 1024ull +
                                      static_cast<uint64_t>(slot));
}

std::vector<int> Trainer::next_batch() {
    const int B = std::min(cfg_.optimizer.batch_size, static_cast<int>(train_set_.samples.size()));
    std::vector<int> batch;
    while (static_cast<int>(batch.size()) < B) {
        if (pending_.empty()) {
            pending_.resize(train_set_.samples.size());
            for (size_t i = 0; i < pending_.size(); ++i) pending_[i] = static_cast<int>(i);
            schedule_rng_.shuffle(pending_);
        }
        batch.push_back(pending_.back());
        pending_.pop_back();
    }
    return batch;
}

loss::LossBreakdown Trainer::step() {
    ++iteration_;
    const std::vector<int> batch = next_batch();
    opt_->zero_grad(params_);

    Var total;
    loss::LossBreakdown mean_terms;
    for (size_t slot = 0; slot < batch.size(); ++slot) {
        const int idx = batch[slot];
        const uint64_t seed = forward_seed(iteration_, static_cast<int>(slot));
        model::ForwardResult fwd = model_->forward(train_set_.samples[static_cast<size_t>(idx)].image, seed);
        loss::LossOptions lo;
        lo.weights = cfg_.loss.weights;
        lo.point_count = cfg_.loss.point_count;
        lo.oversample = cfg_.loss.oversample;
        lo.importance_fraction = cfg_.loss.importance_fraction;
        lo.seed = seed;
        auto [image_loss, terms] = loss::total_loss(fwd.stages, train_targets_[static_cast<size_t>(idx)], lo);
        total = total ? ops::add(total, image_loss) : image_loss;
        mean_terms.loc_bce += terms.loc_bce;
        mean_terms.mask_bce += terms.mask_bce;
        mean_terms.mask_dice += terms.mask_dice;
        mean_terms.boundary_bce += terms.boundary_bce;
        mean_terms.boundary_dice += terms.boundary_dice;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    total = ops::scale(total, inv);
    mean_terms.loc_bce *= inv;
    mean_terms.mask_bce *= inv;
    mean_terms.mask_dice *= inv;
    mean_terms.boundary_bce *= inv;
    mean_terms.boundary_dice *= inv;
    mean_terms.total = loss::combine_total(mean_terms, cfg_.loss.weights);

    nn::backward(total);
    opt_->step(params_);
    return mean_terms;
}

nn::Checkpoint Trainer::checkpoint() const {
    nn::Checkpoint c = model::snapshot_params(params_, cfg_.model);
    for (auto& [name, t] : opt_->state_tensors()) c.tensors.emplace(name, std::move(t));
    c.tensors.emplace("trainer.iteration", nn::Tensor::scalar(static_cast<double>(iteration_)));
    return c;
}

void Trainer::restore(const nn::Checkpoint& ckpt) {
    check_input(ckpt.fingerprint == cfg_.model.fingerprint(),
                "checkpoint fingerprint mismatch: refusing to load");
    model::restore_params(params_, ckpt);
    std::map<std::string, nn::Tensor> opt_state;
    for (const auto& [name, t] : ckpt.tensors)
        if (name.rfind("opt.", 0) == 0) opt_state.emplace(name, t);
    opt_->load_state(opt_state);
    auto it = ckpt.tensors.find("trainer.iteration");
    if (it != ckpt.tensors.end()) iteration_ = static_cast<int>(it->second[0]);
}

namespace {
std::string csv_row(int iteration, const loss::LossBreakdown& t) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g", iteration, t.loc_bce,
                  t.mask_bce, t.mask_dice, t.boundary_bce, t.boundary_dice, t.total);
    return buf;
}
}  // namespace

TrainResult train_run(const RunConfig& cfg, const std::optional<std::string>& resume_checkpoint) {
    Trainer trainer(cfg);
    const std::string run_dir = resolve_run_dir(cfg.out);
    fs::create_directories(run_dir);
    {
        std::ofstream snap(run_dir + "/config.resolved");
        check_input(snap.good(), "cannot write to run directory: " + run_dir);
        snap << cfg.resolved();
    }
    if (resume_checkpoint)
        trainer.restore(nn::load_checkpoint(*resume_checkpoint, cfg.model.fingerprint()));

    TrainResult result;
    result.run_dir = run_dir;
    result.loss_csv_path = run_dir + "/loss.csv";
    const bool fresh = !resume_checkpoint;
    std::ofstream csv(result.loss_csv_path, fresh ? std::ios::trunc : std::ios::app);
    if (fresh) csv << "iteration,loc_bce,mask_bce,mask_dice,boundary_bce,boundary_dice,total\n";

    while (trainer.iteration() < cfg.optimizer.iterations) {
        const loss::LossBreakdown terms = trainer.step();
        const int it = trainer.iteration();
        if (it % cfg.optimizer.log_every == 0 || it == cfg.optimizer.iterations)
            csv << csv_row(it, terms) << "\n";
        if (cfg.optimizer.checkpoint_every > 0 && it % cfg.optimizer.checkpoint_every == 0 &&
            it != cfg.optimizer.iterations) {
            nn::save_checkpoint(run_dir + "/checkpoint_" + std::to_string(it) + ".ckpt", trainer.checkpoint());
        }
        result.final_loss = terms;
    }
    result.final_checkpoint_path = run_dir + "/checkpoint_final.ckpt";
    nn::save_checkpoint(result.final_checkpoint_path, trainer.checkpoint());
    return result;
}

}  // namespace camoseg::harness
