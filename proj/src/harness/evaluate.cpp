#include "camoseg/harness/evaluate.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace camoseg::harness {

using nlohmann::json;
using nn::Rng;

EvalResult evaluate_model(const model::Model& m, const Dataset& ds, uint64_t seed) {
    EvalResult out;
    std::vector<data::EvalPrediction> preds;
    std::vector<data::EvalGroundTruth> gts;
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& sample = ds.samples[i];
        model::ForwardResult fwd = m.forward(sample.image, Rng::derive(seed, 0xe7a1ull + i));
        const auto dets = model::assemble_predictions(fwd.final_stage(), m.config().score_threshold,
                                                      m.config().mask_threshold, sample.record.height,
                                                      sample.record.width);
        for (const auto& det : dets) {
            preds.push_back({static_cast<int>(i), det.score, det.mask});
            out.predictions.push_back({sample.record.image_id, det.score, data::rle_encode(det.mask)});
        }
        for (const auto& inst : sample.record.instances) gts.push_back({static_cast<int>(i), inst.mask});
    }
    out.report = data::evaluate_ap(preds, gts);
    return out;
}

void write_report_json(const std::string& path, const data::APReport& report) {
    json j;
    j["ap"] = report.ap;
    j["ap50"] = report.ap50;
    j["ap75"] = report.ap75;
    j["per_threshold"] = json::object();
    for (const auto& [t, ap] : report.per_threshold) j["per_threshold"][std::to_string(t)] = ap;
    std::ofstream f(path, std::ios::trunc);
    check_input(f.good(), "cannot write report: " + path);
    f << j.dump(1) << "\n";
}

data::APReport read_report_json(const std::string& path) {
    std::ifstream f(path);
    check_input(f.good(), "cannot open report: " + path);
    json j;
    f >> j;
    data::APReport r;
    r.ap = j.at("ap").get<double>();
    r.ap50 = j.at("ap50").get<double>();
    r.ap75 = j.at("ap75").get<double>();
    for (const auto& [k, v] : j.at("per_threshold").items())
        r.per_threshold.emplace_back(std::stoi(k), v.get<double>());
    return r;
}

EvalResult eval_run(const RunConfig& cfg, const std::string& checkpoint_path, const std::string& split,
                    const std::string& out_dir) {
    cfg.validate();
    nn::ParamStore params;
    Rng init_rng(cfg.seed);
    model::Model m(params, cfg.model, init_rng);
    // Refuses on fingerprint mismatch.
    const nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint_path, cfg.model.fingerprint());
    model::restore_params(params, ckpt);

    Dataset ds = load_split(cfg.data, cfg.seed, split);
    EvalResult result = evaluate_model(m, ds, Rng::derive(cfg.seed, split == "train" ? 11 : 22));

    std::filesystem::create_directories(out_dir);
    write_report_json(out_dir + "/report.json", result.report);
    data::save_predictions(out_dir + "/predictions.json", result.predictions);
    return result;
}

}  // namespace camoseg::harness
