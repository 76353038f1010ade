#pragma once

#include <string>
#include <vector>

#include "camoseg/nn/tensor.hpp"

namespace camoseg::harness {

using nn::Tensor;

struct Color {
    double r, g, b;
};

// Minimal raster painter backing the plot command (PPM output keeps the
// pipeline free of image libraries and byte-deterministic).
class Canvas {
public:
    Canvas(int w, int h, Color background);

    void put(int x, int y, Color c);
    void line(double x0, double y0, double x1, double y1, Color c);
    void fill_rect(int x0, int y0, int w, int h, Color c);
    // Polyline of (x,y) data points mapped into the given pixel viewport.
    void plot_series(const std::vector<double>& xs, const std::vector<double>& ys, int vx, int vy,
                     int vw, int vh, Color c);

    void save(const std::string& path) const;
    int width() const { return w_; }
    int height() const { return h_; }

private:
    int w_, h_;
    Tensor img_;  // [3,H,W]
};

Color palette_color(int index);

}  // namespace camoseg::harness
