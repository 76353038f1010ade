#pragma once

#include "camoseg/data/annotations.hpp"

namespace camoseg::data {

// Desk-scale stand-in for a camouflage dataset: gradient-noise backgrounds
// and star-convex blob instances filled with offset samples of the same
// noise field plus a small intensity shift, so instance/background contrast
// stays low. Deterministic per seed.
struct SynthConfig {
    int image_size = 96;
    int min_instances = 1;
    int max_instances = 3;
    // Upper bound on the mean absolute intensity difference between an
    // instance interior and the background ring around it.
    double contrast_bound = 0.12;
    double min_radius = 10.0;
    double max_radius = 22.0;
    int boundary_width = 2;
};

struct SynthSample {
    Tensor image;  // [3,H,W] in [0,1]
    ImageRecord record;
};

std::vector<SynthSample> synth_generate(const SynthConfig& cfg, uint64_t seed, int count);

// 2D gradient (Perlin) noise in roughly [-1,1]; exposed for tests.
double perlin_fbm(uint64_t seed, double x, double y, int octaves);

}  // namespace camoseg::data
