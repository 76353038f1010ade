#include "camoseg/harness/plot.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "camoseg/data/image_io.hpp"
#include "camoseg/harness/canvas.hpp"
#include "camoseg/harness/evaluate.hpp"

namespace camoseg::harness {

namespace fs = std::filesystem;

std::pair<std::vector<double>, std::vector<double>> read_loss_csv(const std::string& path) {
    std::ifstream f(path);
    check_input(f.good(), "missing loss CSV: " + path);
    std::string line;
    std::getline(f, line);  // header
    std::vector<double> its, totals;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        check_input(cells.size() == 7, "malformed loss CSV row: " + line);
        its.push_back(cells[0]);
        totals.push_back(cells[6]);
    }
    return {its, totals};
}

namespace {
void render_loss_curve(const std::string& csv, const std::string& out) {
    auto [its, totals] = read_loss_csv(csv);
    Canvas canvas(640, 400, {1.0, 1.0, 1.0});
    canvas.fill_rect(48, 16, 640 - 64, 400 - 48, {0.97, 0.97, 0.97});
    canvas.line(48, 400 - 32, 640 - 16, 400 - 32, {0.1, 0.1, 0.1});
    canvas.line(48, 16, 48, 400 - 32, {0.1, 0.1, 0.1});
    canvas.plot_series(its, totals, 48, 16, 640 - 64, 400 - 48, palette_color(0));
    canvas.save(out);
}

void render_ap_bars(const data::APReport& r, const std::string& out) {
    Canvas canvas(420, 300, {1.0, 1.0, 1.0});
    canvas.line(32, 300 - 32, 420 - 16, 300 - 32, {0.1, 0.1, 0.1});
    canvas.line(32, 16, 32, 300 - 32, {0.1, 0.1, 0.1});
    const double vals[3] = {r.ap, r.ap50, r.ap75};
    for (int i = 0; i < 3; ++i) {
        const int h = static_cast<int>(vals[i] * (300 - 64));
        canvas.fill_rect(64 + i * 120, 300 - 32 - h, 80, h, palette_color(i));
    }
    canvas.save(out);
}

Tensor overlay_image(const Tensor& image, const std::vector<std::pair<Tensor, int>>& masks) {
    Tensor out = image;
    const int H = image.dim(1), W = image.dim(2);
    for (const auto& [mask, color_idx] : masks) {
        const Color c = palette_color(color_idx);
        const double rgb[3] = {c.r, c.g, c.b};
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (mask.at(y, x) < 0.5) continue;
                for (int ch = 0; ch < 3; ++ch)
                    out.at(ch, y, x) = 0.55 * out.at(ch, y, x) + 0.45 * rgb[ch];
            }
    }
    return out;
}
}  // namespace

PlotResult plot_run(const std::string& run_dir, int overlay_count) {
    PlotResult result;
    const std::string csv = run_dir + "/loss.csv";
    if (!fs::exists(csv)) throw InvalidInputError("plot: missing loss CSV in " + run_dir);
    const std::string curve = run_dir + "/loss_curve.ppm";
    render_loss_curve(csv, curve);
    result.files.push_back(curve);

    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (!entry.is_directory()) continue;
        const std::string report_path = entry.path().string() + "/report.json";
        if (!fs::exists(report_path)) continue;
        const std::string bars = entry.path().string() + "/ap_bars.ppm";
        render_ap_bars(read_report_json(report_path), bars);
        result.files.push_back(bars);

        const std::string preds_path = entry.path().string() + "/predictions.json";
        const std::string config_path = run_dir + "/config.resolved";
        if (!fs::exists(preds_path) || !fs::exists(config_path)) continue;
        RunConfig cfg = parse_config_file(config_path);
        const std::string split = entry.path().filename().string() == "eval_train" ? "train" : "val";
        Dataset ds = load_split(cfg.data, cfg.seed, split);
        auto preds = data::load_predictions(preds_path);
        const int n = std::min(overlay_count, static_cast<int>(ds.samples.size()));
        for (int i = 0; i < n; ++i) {
            std::vector<std::pair<Tensor, int>> masks;
            int color = 0;
            for (const auto& p : preds)
                if (p.image_id == ds.samples[static_cast<size_t>(i)].record.image_id)
                    masks.emplace_back(data::rle_decode(p.rle), color++);
            const std::string out = entry.path().string() + "/overlay_" +
                                    ds.samples[static_cast<size_t>(i)].record.image_id + ".ppm";
            data::write_ppm(out, overlay_image(ds.samples[static_cast<size_t>(i)].image, masks));
            result.files.push_back(out);
        }
    }
    return result;
}

}  // namespace camoseg::harness
