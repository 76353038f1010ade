#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "camoseg/nn/tensor.hpp"

namespace camoseg::nn {

// Single-file binary checkpoint: a flat name -> tensor map plus a config
// fingerprint. Loading refuses on fingerprint mismatch.
struct Checkpoint {
    uint64_t fingerprint = 0;
    std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);
// Throws InvalidInputError when the stored fingerprint differs.
Checkpoint load_checkpoint(const std::string& path, uint64_t expected_fingerprint);

// FNV-1a; used for config fingerprints.
uint64_t fnv1a64(const std::string& s);

}  // namespace camoseg::nn
