#include "camoseg/loss/point_sampling.hpp"

#include <algorithm>
#include <cmath>

#include "camoseg/nn/kernels.hpp"
#include "camoseg/nn/rng.hpp"

namespace camoseg::loss {

namespace ops = nn::ops;

Tensor uniform_points(int k, uint64_t seed) {
    nn::Rng rng(nn::Rng::derive(seed, 0x706f696eull));
    Tensor pts({k, 2});
    for (int i = 0; i < k; ++i) {
        pts.at(i, 0) = rng.uniform();
        pts.at(i, 1) = rng.uniform();
    }
    return pts;
}

Tensor grid_points(int h, int w) {
    Tensor pts({h * w, 2});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            pts.at(y * w + x, 0) = (x + 0.5) / static_cast<double>(w);
            pts.at(y * w + x, 1) = (y + 0.5) / static_cast<double>(h);
        }
    return pts;
}

Tensor importance_points(const Tensor& logit_map, int k, double oversample,
                         double importance_fraction, uint64_t seed) {
    check_contract(logit_map.rank() == 2, "importance_points expects [h,w]");
    nn::Rng rng(nn::Rng::derive(seed, 0x756e6365ull));
    const int n_cand = static_cast<int>(std::ceil(oversample * k));
    Tensor cand({n_cand, 2});
    for (int i = 0; i < n_cand; ++i) {
        cand.at(i, 0) = rng.uniform();
        cand.at(i, 1) = rng.uniform();
    }
    Tensor vals = read_map(logit_map, cand);
    std::vector<int> order(static_cast<size_t>(n_cand));
    for (int i = 0; i < n_cand; ++i) order[static_cast<size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(vals[a]) < std::abs(vals[b]);  // most uncertain first
    });
    const int n_imp = std::min(k, static_cast<int>(std::floor(importance_fraction * k)));
    Tensor pts({k, 2});
    for (int i = 0; i < n_imp; ++i) {
        pts.at(i, 0) = cand.at(order[static_cast<size_t>(i)], 0);
        pts.at(i, 1) = cand.at(order[static_cast<size_t>(i)], 1);
    }
    for (int i = n_imp; i < k; ++i) {
        pts.at(i, 0) = rng.uniform();
        pts.at(i, 1) = rng.uniform();
    }
    return pts;
}

Tensor read_map(const Tensor& map, const Tensor& pts) {
    check_contract(map.rank() == 2, "read_map expects [h,w]");
    const int K = pts.dim(0);
    Tensor out({K});
    nn::kernels::grid_sample_forward(map.data(), pts.data(), out.data(), 1, map.dim(0), map.dim(1), K);
    return out;
}

Var read_logits(const Var& logit_map, const Tensor& pts) {
    const int h = logit_map->value.dim(0), w = logit_map->value.dim(1);
    Var chw = ops::reshape(logit_map, {1, h, w});
    return ops::reshape(ops::grid_sample(chw, pts), {pts.dim(0)});
}

Tensor read_targets(const Tensor& target_map, const Tensor& pts) {
    Tensor raw = read_map(target_map, pts);
    for (auto& v : raw.v) v = v >= 0.5 ? 1.0 : 0.0;
    return raw;
}

SampledPair sample_points(const Var& logit_map, const Tensor& target_map, int k,
                          SampleStrategy strategy, uint64_t seed, double oversample,
                          double importance_fraction) {
    SampledPair out;
    switch (strategy) {
        case SampleStrategy::Uniform:
            out.coords = uniform_points(k, seed);
            break;
        case SampleStrategy::Importance:
            out.coords = importance_points(logit_map->value, k, oversample, importance_fraction, seed);
            break;
        case SampleStrategy::FullGrid:
            out.coords = grid_points(logit_map->value.dim(0), logit_map->value.dim(1));
            break;
    }
    out.pred_logits = read_logits(logit_map, out.coords);
    out.targets = read_targets(target_map, out.coords);
    return out;
}

}  // namespace camoseg::loss
