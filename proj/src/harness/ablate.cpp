#include "camoseg/harness/ablate.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "camoseg/harness/evaluate.hpp"
#include "camoseg/harness/plot.hpp"

namespace camoseg::harness {

namespace fs = std::filesystem;

namespace {
std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}
}  // namespace

SweepConfig parse_sweep_file(const std::string& path) {
    std::ifstream f(path);
    if (!f.good()) throw ConfigError("cannot open sweep file: " + path);
    SweepConfig sweep;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "name") {
            sweep.name = value;
        } else if (key == "base") {
            sweep.base_config_path =
                value[0] == '/' ? value : (fs::path(path).parent_path() / value).string();
        } else if (key.rfind("variant.", 0) == 0) {
            SweepVariant v;
            v.name = key.substr(8);
            std::stringstream ss(value);
            std::string part;
            while (std::getline(ss, part, ';')) {
                part = trim(part);
                if (part.empty()) continue;
                const size_t peq = part.find('=');
                if (peq == std::string::npos)
                    throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value override");
                v.overrides.emplace_back(trim(part.substr(0, peq)), trim(part.substr(peq + 1)));
            }
            sweep.variants.push_back(std::move(v));
        } else {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown sweep key " + key);
        }
    }
    if (sweep.name.empty()) throw ConfigError(path + ": sweep needs a name");
    if (sweep.base_config_path.empty()) throw ConfigError(path + ": sweep needs a base config");
    if (sweep.variants.empty()) throw ConfigError(path + ": sweep lists no variants");
    return sweep;
}

namespace {
std::string axis_of(const std::string& sweep_name, const RunConfig& cfg) {
    if (sweep_name == "decoder_num") {
        std::string s = "{";
        for (size_t i = 0; i < cfg.model.scales.size(); ++i)
            s += std::string(i ? ", " : "") + "X" + std::to_string(cfg.model.scales[i]);
        return s + "}";
    }
    if (sweep_name == "queryinitialization") {
        auto code = [](model::InitStrategy s) { return s == model::InitStrategy::Salient ? "A" : "B"; };
        return std::string(code(cfg.model.init_mask)) + " " + code(cfg.model.init_boundary);
    }
    if (sweep_name == "queries_update") return model::to_string(cfg.model.update_strategy);
    if (sweep_name == "loss_w") {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "a=%g b=%g", cfg.loss.weights.alpha, cfg.loss.weights.beta);
        return buf;
    }
    return "-";
}

int64_t count_params(const RunConfig& cfg) {
    nn::ParamStore ps;
    nn::Rng rng(cfg.seed);
    model::Model m(ps, cfg.model, rng);
    return ps.total_count();
}
}  // namespace

std::string format_table(const std::string& sweep_name, const std::vector<AblateRow>& rows) {
    std::string axis_header = "Axis";
    if (sweep_name == "decoder_num") axis_header = "Features";
    if (sweep_name == "queryinitialization") axis_header = "Qm0 Qb0";
    if (sweep_name == "queries_update") axis_header = "Update";
    if (sweep_name == "loss_w") axis_header = "Weights";

    size_t name_w = std::string("Variant").size(), axis_w = axis_header.size();
    for (const auto& r : rows) {
        name_w = std::max(name_w, r.name.size());
        axis_w = std::max(axis_w, r.axis.size());
    }
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %10s  %7s  %7s  %7s  %10s\n", static_cast<int>(name_w),
                  "Variant", static_cast<int>(axis_w), axis_header.c_str(), "Params", "AP", "AP50",
                  "AP75", "FinalLoss");
    os << "# ablation: " << sweep_name << "\n" << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %10lld  %7.3f  %7.3f  %7.3f  %10.4f\n",
                      static_cast<int>(name_w), r.name.c_str(), static_cast<int>(axis_w), r.axis.c_str(),
                      static_cast<long long>(r.param_count), r.report.ap, r.report.ap50, r.report.ap75,
                      r.final_loss);
        os << buf;
    }
    return os.str();
}

AblateResult run_sweep(const SweepConfig& sweep, const std::string& out_dir) {
    AblateResult result;
    result.out_dir = resolve_run_dir(out_dir);
    fs::create_directories(result.out_dir);
    for (const auto& variant : sweep.variants) {
        RunConfig cfg = parse_config_file(sweep.base_config_path);
        for (const auto& [k, v] : variant.overrides) apply_override(cfg, k, v);
        cfg.out = result.out_dir + "/" + variant.name;
        cfg.validate();

        // Fresh model and run directory per variant; only the seed is shared.
        TrainResult tr = train_run(cfg);
        EvalResult ev = eval_run(cfg, tr.final_checkpoint_path, "val", tr.run_dir + "/eval_val");
        plot_run(tr.run_dir);

        AblateRow row;
        row.name = variant.name;
        row.axis = axis_of(sweep.name, cfg);
        row.param_count = count_params(cfg);
        row.report = ev.report;
        row.final_loss = tr.final_loss.total;
        result.rows.push_back(std::move(row));
    }
    result.table_path = result.out_dir + "/table.txt";
    std::ofstream f(result.table_path, std::ios::trunc);
    f << format_table(sweep.name, result.rows);
    return result;
}

}  // namespace camoseg::harness
