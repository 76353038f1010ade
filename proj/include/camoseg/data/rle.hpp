#pragma once

#include <vector>

#include "camoseg/nn/tensor.hpp"

namespace camoseg::data {

using nn::Tensor;

// Column-major run-length encoding of a binary mask (COCO layout: counts of
// alternating background/foreground runs, starting with background).
struct Rle {
    std::vector<int> counts;
    int h = 0, w = 0;
};

Rle rle_encode(const Tensor& mask /*[H,W] binary*/);
Tensor rle_decode(const Rle& rle);

}  // namespace camoseg::data
