#pragma once

#include <string>

#include "camoseg/nn/tensor.hpp"

namespace camoseg::data {

using nn::Tensor;

// Lossless 8-bit binary PPM (P6). Values clamp to [0,1] and quantize by
// round-to-nearest, so writes are byte-deterministic.
void write_ppm(const std::string& path, const Tensor& image /*[3,H,W]*/);
Tensor read_ppm(const std::string& path);

}  // namespace camoseg::data
