#pragma once

#include <utility>
#include <vector>

#include "camoseg/nn/tensor.hpp"

namespace camoseg::loss {

using nn::Tensor;

struct MatchAssignment {
    std::vector<std::pair<int, int>> pairs;  // (gt_index, prediction_index), one per gt
    double total_cost = 0.0;
};

// Minimum-cost injective assignment of G ground truths to N predictions,
// G <= N, via shortest augmenting paths, then refined to the
// lexicographically smallest optimal pair list. Throws InvalidInputError when
// G > N.
MatchAssignment hungarian_match(const Tensor& cost /*[G,N]*/);

}  // namespace camoseg::loss
