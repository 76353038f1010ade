#include "camoseg/harness/canvas.hpp"

#include <algorithm>
#include <cmath>

#include "camoseg/data/image_io.hpp"

namespace camoseg::harness {

Canvas::Canvas(int w, int h, Color bg) : w_(w), h_(h), img_({3, h, w}) {
    fill_rect(0, 0, w, h, bg);
}

void Canvas::put(int x, int y, Color c) {
    if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
    img_.at(0, y, x) = c.r;
    img_.at(1, y, x) = c.g;
    img_.at(2, y, x) = c.b;
}

void Canvas::line(double x0, double y0, double x1, double y1, Color c) {
    const double dx = x1 - x0, dy = y1 - y0;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        put(static_cast<int>(std::lround(x0 + t * dx)), static_cast<int>(std::lround(y0 + t * dy)), c);
    }
}

void Canvas::fill_rect(int x0, int y0, int w, int h, Color c) {
    for (int y = std::max(0, y0); y < std::min(h_, y0 + h); ++y)
        for (int x = std::max(0, x0); x < std::min(w_, x0 + w); ++x) put(x, y, c);
}

void Canvas::plot_series(const std::vector<double>& xs, const std::vector<double>& ys, int vx, int vy,
                         int vw, int vh, Color c) {
    if (xs.size() < 2 || xs.size() != ys.size()) return;
    const double xmin = *std::min_element(xs.begin(), xs.end());
    const double xmax = *std::max_element(xs.begin(), xs.end());
    const double ymin = std::min(0.0, *std::min_element(ys.begin(), ys.end()));
    const double ymax = *std::max_element(ys.begin(), ys.end());
    const double xr = xmax > xmin ? xmax - xmin : 1.0;
    const double yr = ymax > ymin ? ymax - ymin : 1.0;
    auto px = [&](double x) { return vx + (x - xmin) / xr * (vw - 1); };
    auto py = [&](double y) { return vy + vh - 1 - (y - ymin) / yr * (vh - 1); };
    for (size_t i = 1; i < xs.size(); ++i)
        line(px(xs[i - 1]), py(ys[i - 1]), px(xs[i]), py(ys[i]), c);
}

void Canvas::save(const std::string& path) const { data::write_ppm(path, img_); }

Color palette_color(int index) {
    static const Color colors[] = {
        {0.85, 0.25, 0.25}, {0.25, 0.55, 0.85}, {0.25, 0.7, 0.35}, {0.85, 0.65, 0.2},
        {0.6, 0.35, 0.75},  {0.2, 0.7, 0.7},    {0.8, 0.4, 0.6},   {0.5, 0.5, 0.5},
    };
    return colors[index % 8];
}

}  // namespace camoseg::harness
