#include "camoseg/data/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace camoseg::data {

void write_ppm(const std::string& path, const Tensor& image) {
    check_input(image.rank() == 3 && image.dim(0) == 3, "write_ppm expects [3,H,W]");
    const int H = image.dim(1), W = image.dim(2);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    check_input(f.good(), "cannot write image: " + path);
    f << "P6\n" << W << " " << H << "\n255\n";
    std::string row(static_cast<size_t>(W) * 3, '\0');
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
                row[static_cast<size_t>(x) * 3 + static_cast<size_t>(c)] =
                    static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
            }
        f.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
}

Tensor read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check_input(f.good(), "cannot open image: " + path);
    std::string magic;
    f >> magic;
    check_input(magic == "P6", "not a P6 ppm: " + path);
    int w = 0, h = 0, maxv = 0;
    f >> w >> h >> maxv;
    check_input(w > 0 && h > 0 && maxv == 255, "unsupported ppm header: " + path);
    f.get();  // single whitespace after header
    Tensor img({3, h, w});
    std::string row(static_cast<size_t>(w) * 3, '\0');
    for (int y = 0; y < h; ++y) {
        f.read(row.data(), static_cast<std::streamsize>(row.size()));
        check_input(f.good(), "truncated ppm: " + path);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) = static_cast<unsigned char>(row[static_cast<size_t>(x) * 3 + static_cast<size_t>(c)]) / 255.0;
    }
    return img;
}

}  // namespace camoseg::data
