#include "camoseg/data/synth.hpp"

#include <algorithm>
#include <cmath>

#include "camoseg/nn/rng.hpp"

namespace camoseg::data {

using nn::Rng;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

uint64_t hash2(uint64_t seed, int64_t ix, int64_t iy) {
    uint64_t h = seed ^ (static_cast<uint64_t>(ix) * 0x9e3779b97f4a7c15ull) ^
                 (static_cast<uint64_t>(iy) * 0xc2b2ae3d27d4eb4full);
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double perlin(uint64_t seed, double x, double y) {
    const int64_t x0 = static_cast<int64_t>(std::floor(x));
    const int64_t y0 = static_cast<int64_t>(std::floor(y));
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    auto grad_dot = [&](int64_t ix, int64_t iy, double dx, double dy) {
        const double a = static_cast<double>(hash2(seed, ix, iy) >> 11) * 0x1.0p-53 * kTwoPi;
        return std::cos(a) * dx + std::sin(a) * dy;
    };
    const double n00 = grad_dot(x0, y0, fx, fy);
    const double n10 = grad_dot(x0 + 1, y0, fx - 1.0, fy);
    const double n01 = grad_dot(x0, y0 + 1, fx, fy - 1.0);
    const double n11 = grad_dot(x0 + 1, y0 + 1, fx - 1.0, fy - 1.0);
    const double ux = fade(fx), uy = fade(fy);
    const double a = n00 + ux * (n10 - n00);
    const double b = n01 + ux * (n11 - n01);
    return a + uy * (b - a);
}
}  // namespace

double perlin_fbm(uint64_t seed, double x, double y, int octaves) {
    double acc = 0.0, amp = 1.0, freq = 1.0, norm = 0.0;
    for (int o = 0; o < octaves; ++o) {
        acc += amp * perlin(Rng::derive(seed, static_cast<uint64_t>(o)), x * freq, y * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return acc / norm;
}

namespace {
struct Blob {
    double cx, cy, r0;
    std::vector<double> amp, phase;  // radial Fourier modulation, k = 2..
    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d < 1e-9) return true;
        const double theta = std::atan2(dy, dx);
        double r = r0;
        for (size_t k = 0; k < amp.size(); ++k)
            r += r0 * amp[k] * std::cos(static_cast<double>(k + 2) * theta + phase[k]);
        return d <= r;
    }
};
}  // namespace

std::vector<SynthSample> synth_generate(const SynthConfig& cfg, uint64_t seed, int count) {
    check_input(cfg.min_instances >= 1 && cfg.max_instances >= cfg.min_instances,
                "synth: bad instance count range");
    std::vector<SynthSample> out;
    const int S = cfg.image_size;
    for (int idx = 0; idx < count; ++idx) {
        const uint64_t iseed = Rng::derive(seed, static_cast<uint64_t>(idx) + 1);
        Rng rng(iseed);
        const uint64_t lum_seed = rng.next_u64();
        const uint64_t chan_seed[3] = {rng.next_u64(), rng.next_u64(), rng.next_u64()};
        const double freq = rng.uniform(2.0, 4.0) / static_cast<double>(S);

        const int n = cfg.min_instances + rng.uniform_int(cfg.max_instances - cfg.min_instances + 1);
        // One blob per cell of a jittered grid so no instance is swallowed.
        const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.max_instances))));
        std::vector<int> cells(static_cast<size_t>(grid * grid));
        for (size_t c = 0; c < cells.size(); ++c) cells[c] = static_cast<int>(c);
        rng.shuffle(cells);
        const double cell = static_cast<double>(S) / grid;
        std::vector<Blob> blobs;
        std::vector<double> shift, off_x, off_y;
        for (int b = 0; b < n; ++b) {
            const int cy = cells[static_cast<size_t>(b)] / grid;
            const int cx = cells[static_cast<size_t>(b)] % grid;
            Blob blob;
            blob.cx = (cx + 0.5) * cell + rng.uniform(-cell / 6.0, cell / 6.0);
            blob.cy = (cy + 0.5) * cell + rng.uniform(-cell / 6.0, cell / 6.0);
            blob.r0 = rng.uniform(cfg.min_radius, std::min(cfg.max_radius, 0.55 * cell));
            double amp_sum = 0.0;
            for (int k = 0; k < 3; ++k) {
                blob.amp.push_back(rng.uniform(0.0, 0.18 / (k + 1.0)));
                blob.phase.push_back(rng.uniform(0.0, kTwoPi));
                amp_sum += blob.amp.back();
            }
            // Cap the outermost extent so no blob can swallow a neighbour.
            blob.r0 = std::min(blob.r0, 0.58 * cell / (1.0 + amp_sum));
            blobs.push_back(blob);
            shift.push_back(rng.uniform(-0.3, 0.3) * cfg.contrast_bound);
            off_x.push_back(rng.uniform(40.0, 200.0));
            off_y.push_back(rng.uniform(40.0, 200.0));
        }

        SynthSample sample;
        sample.image = Tensor({3, S, S});
        sample.record.height = S;
        sample.record.width = S;
        {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "synth-%06d", idx);
            sample.record.image_id = buf;
        }
        std::vector<Tensor> masks(static_cast<size_t>(n), Tensor({S, S}));
        for (int y = 0; y < S; ++y) {
            for (int x = 0; x < S; ++x) {
                // Later blobs sit closer to the camera.
                int owner = -1;
                for (int b = n - 1; b >= 0 && owner < 0; --b)
                    if (blobs[static_cast<size_t>(b)].contains(x + 0.5, y + 0.5)) owner = b;
                double sx = x + 0.5, sy = y + 0.5, bias = 0.0;
                if (owner >= 0) {
                    masks[static_cast<size_t>(owner)].at(y, x) = 1.0;
                    sx += off_x[static_cast<size_t>(owner)];
                    sy += off_y[static_cast<size_t>(owner)];
                    bias = shift[static_cast<size_t>(owner)];
                }
                const double lum = 0.5 + 0.16 * perlin_fbm(lum_seed, sx * freq, sy * freq, 3) + bias;
                for (int c = 0; c < 3; ++c) {
                    const double tint = 0.05 * perlin_fbm(chan_seed[c], sx * freq * 1.7, sy * freq * 1.7, 2);
                    sample.image.at(c, y, x) = std::clamp(lum + tint, 0.02, 0.98);
                }
            }
        }
        for (int b = 0; b < n; ++b) {
            InstanceAnnotation inst;
            inst.image_id = sample.record.image_id;
            inst.mask = masks[static_cast<size_t>(b)];
            inst.boundary = gt_boundary_from_mask(inst.mask, cfg.boundary_width);
            sample.record.instances.push_back(std::move(inst));
        }
        out.push_back(std::move(sample));
    }
    return out;
}

}  // namespace camoseg::data
