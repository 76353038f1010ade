#include "camoseg/nn/posenc.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace camoseg::nn {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kTemperature = 10000.0;

void embed_one(double x, double y, int dim, double* out) {
    const int half = dim / 2;
    // y goes first, then x, matching the usual image convention.
    for (int i = 0; i < half; ++i) {
        const double t = std::pow(kTemperature, 2.0 * static_cast<double>(i / 2) / static_cast<double>(half));
        const double py = y * kTwoPi / t;
        out[i] = (i % 2 == 0) ? std::sin(py) : std::cos(py);
    }
    for (int i = 0; i < dim - half; ++i) {
        const double t = std::pow(kTemperature, 2.0 * static_cast<double>(i / 2) / static_cast<double>(half));
        const double px = x * kTwoPi / t;
        out[half + i] = (i % 2 == 0) ? std::sin(px) : std::cos(px);
    }
}
}  // namespace

Tensor sine_embed_points(const Tensor& pts, int dim) {
    check_contract(pts.rank() == 2 && pts.dim(1) == 2, "sine_embed_points expects [P,2]");
    const int P = pts.dim(0);
    Tensor out({P, dim});
    for (int p = 0; p < P; ++p)
        embed_one(pts.at(p, 0), pts.at(p, 1), dim, out.data() + static_cast<int64_t>(p) * dim);
    return out;
}

Tensor sine_embed_grid(int h, int w, int dim) {
    // Grid encodings are pure functions of (h,w,dim) and sit on the hot path
    // of every forward; memoize them.
    static std::mutex mu;
    static std::map<std::tuple<int, int, int>, Tensor> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find({h, w, dim});
        if (it != cache.end()) return it->second;
    }
    Tensor out({h * w, dim});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            embed_one((j + 0.5) / static_cast<double>(w), (i + 0.5) / static_cast<double>(h), dim,
                      out.data() + (static_cast<int64_t>(i) * w + j) * dim);
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(std::make_tuple(h, w, dim), out);
    return out;
}

}  // namespace camoseg::nn
