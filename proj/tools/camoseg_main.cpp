// Command-line front end: train / eval / ablate / plot.
//
// Exit codes: 0 success, 1 user error (bad config, bad input, fingerprint
// mismatch), 2 internal error.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "camoseg/harness/ablate.hpp"
#include "camoseg/harness/evaluate.hpp"
#include "camoseg/harness/plot.hpp"
#include "camoseg/harness/train.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::string checkpoint;
    std::optional<uint64_t> seed;
    std::string out;
    std::vector<std::string> sets;
};

camoseg::harness::RunConfig load_config(const CommonFlags& flags) {
    using namespace camoseg::harness;
    if (flags.config.empty()) throw camoseg::ConfigError("--config is required");
    RunConfig cfg = parse_config_file(flags.config);
    for (const auto& kv : flags.sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) throw camoseg::ConfigError("--set expects key=value, got: " + kv);
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.out.empty()) cfg.out = flags.out;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_checkpoint) {
    cmd->add_option("--config", flags.config, "run configuration file");
    if (with_checkpoint) cmd->add_option("--checkpoint", flags.checkpoint, "checkpoint file");
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--out", flags.out, "override the output directory");
    cmd->add_option("--set", flags.sets, "extra key=value config overrides")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace camoseg;
    using namespace camoseg::harness;

    CLI::App app{"query-based camouflaged instance segmentation"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags, plot_flags, ablate_flags;
    std::string eval_split = "val";
    std::string sweep_path, plot_dir;

    CLI::App* cmd_train = app.add_subcommand("train", "train a model and write a run directory");
    add_common(cmd_train, train_flags, true);

    CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint (AP report + predictions)");
    add_common(cmd_eval, eval_flags, true);
    cmd_eval->add_option("--split", eval_split, "dataset split: train or val");

    CLI::App* cmd_ablate = app.add_subcommand("ablate", "run an ablation sweep and emit its table");
    cmd_ablate->add_option("--sweep", sweep_path, "sweep configuration file")->required();
    add_common(cmd_ablate, ablate_flags, false);

    CLI::App* cmd_plot = app.add_subcommand("plot", "render loss curves, AP bars, and mask overlays");
    cmd_plot->add_option("--run", plot_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (cmd_train->parsed()) {
            RunConfig cfg = load_config(train_flags);
            std::optional<std::string> resume;
            if (!train_flags.checkpoint.empty()) resume = train_flags.checkpoint;
            TrainResult r = train_run(cfg, resume);
            std::cout << "run directory: " << r.run_dir << "\n"
                      << "final loss: " << r.final_loss.total << "\n"
                      << "checkpoint: " << r.final_checkpoint_path << "\n";
        } else if (cmd_eval->parsed()) {
            RunConfig cfg = load_config(eval_flags);
            if (eval_flags.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
            if (eval_split != "train" && eval_split != "val")
                throw ConfigError("--split must be train or val");
            const std::string out_dir =
                resolve_run_dir(cfg.out) + "/eval_" + eval_split;
            EvalResult r = eval_run(cfg, eval_flags.checkpoint, eval_split, out_dir);
            std::cout << "ap " << r.report.ap << "  ap50 " << r.report.ap50 << "  ap75 "
                      << r.report.ap75 << "\n"
                      << "report: " << out_dir << "/report.json\n";
        } else if (cmd_ablate->parsed()) {
            SweepConfig sweep = parse_sweep_file(sweep_path);
            const std::string out_dir = ablate_flags.out.empty() ? ("runs/ablate_" + sweep.name) : ablate_flags.out;
            AblateResult r = run_sweep(sweep, out_dir);
            std::cout << format_table(sweep.name, r.rows) << "table: " << r.table_path << "\n";
        } else if (cmd_plot->parsed()) {
            PlotResult r = plot_run(plot_dir);
            for (const auto& f : r.files) std::cout << f << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
