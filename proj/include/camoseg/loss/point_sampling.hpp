#pragma once

#include <cstdint>

#include "camoseg/nn/autograd.hpp"

namespace camoseg::loss {

using nn::Tensor;
using nn::Var;

enum class SampleStrategy { Uniform, Importance, FullGrid };

// K uniform points in [0,1]^2.
Tensor uniform_points(int k, uint64_t seed);
// Every pixel center of an h x w grid, row-major.
Tensor grid_points(int h, int w);
// PointRend-style: oversampled uniform candidates scored by prediction
// uncertainty (-|logit|), keep the most uncertain importance fraction, fill
// the rest with fresh uniform draws.
Tensor importance_points(const Tensor& logit_map /*[h,w]*/, int k, double oversample,
                         double importance_fraction, uint64_t seed);

// Bilinear read of a [h,w] map at normalized points -> [K].
Tensor read_map(const Tensor& map, const Tensor& pts);
// Same read with gradients w.r.t. the logit map.
Var read_logits(const Var& logit_map /*[h,w]*/, const Tensor& pts);
// Ground-truth read: bilinear then thresholded at 0.5 to stay binary.
Tensor read_targets(const Tensor& target_map, const Tensor& pts);

// Per-operation convenience: sampled prediction logits plus aligned targets.
struct SampledPair {
    Var pred_logits;  // [K]
    Tensor targets;   // [K] binary
    Tensor coords;    // [K,2]
};
SampledPair sample_points(const Var& logit_map, const Tensor& target_map, int k,
                          SampleStrategy strategy, uint64_t seed, double oversample = 3.0,
                          double importance_fraction = 0.75);

}  // namespace camoseg::loss
