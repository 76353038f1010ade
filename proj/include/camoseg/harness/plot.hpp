#pragma once

#include <string>
#include <vector>

#include "camoseg/harness/config.hpp"

namespace camoseg::harness {

struct PlotResult {
    std::vector<std::string> files;
};

// Renders loss_curve.ppm from the run's loss CSV, ap_bars.ppm when a
// report.json exists, and mask overlays for a few images when predictions are
// present alongside the config snapshot. Missing loss CSV is an error.
PlotResult plot_run(const std::string& run_dir, int overlay_count = 4);

// Loss CSV reader shared with the experiment harness: (iterations, totals).
std::pair<std::vector<double>, std::vector<double>> read_loss_csv(const std::string& path);

}  // namespace camoseg::harness
