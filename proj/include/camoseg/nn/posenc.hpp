#pragma once

#include "camoseg/nn/tensor.hpp"

namespace camoseg::nn {

// Fixed 2D sine position encodings shared by the encoder and decoder.
// Half the channels encode y, half encode x, interleaved sin/cos pairs with
// the usual 10000 temperature. Coordinates are normalized to [0,1].
Tensor sine_embed_points(const Tensor& pts /*[P,2] (x,y)*/, int dim);

// Encoding for every cell of an H x W grid in row-major order -> [H*W, dim].
// Cell centers sit at ((j+0.5)/W, (i+0.5)/H).
Tensor sine_embed_grid(int h, int w, int dim);

}  // namespace camoseg::nn
