#include "camoseg/model/query_init.hpp"

#include <algorithm>
#include <cmath>

#include "camoseg/nn/posenc.hpp"

namespace camoseg::model {

namespace ops = nn::ops;
using nn::constant;

namespace {
struct Candidate {
    double x, y, score;
};

void sort_by_score(std::vector<Candidate>& cs) {
    std::sort(cs.begin(), cs.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
}

double activation_at(const Tensor& act, double nx, double ny) {
    const int H = act.dim(1), W = act.dim(2);
    const double px = std::clamp(nx * W - 0.5, 0.0, static_cast<double>(W - 1));
    const double py = std::clamp(ny * H - 0.5, 0.0, static_cast<double>(H - 1));
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const int x1 = std::min(x0 + 1, W - 1);
    const int y1 = std::min(y0 + 1, H - 1);
    const double fx = px - x0, fy = py - y0;
    return (1 - fy) * ((1 - fx) * act.at(0, y0, x0) + fx * act.at(0, y0, x1)) +
           fy * ((1 - fx) * act.at(0, y1, x0) + fx * act.at(0, y1, x1));
}
}  // namespace

SalientSelection select_salient_points(const Tensor& activation, int k, const SalientPointConfig& cfg) {
    check_contract(activation.rank() == 3 && activation.dim(0) == 1,
                   "salient selection expects a [1,H,W] activation map");
    const int H = activation.dim(1), W = activation.dim(2);
    if (k > H * W)
        throw InvalidInputError("salient point count " + std::to_string(k) + " exceeds " +
                                std::to_string(H) + "x" + std::to_string(W) + " grid");
    nn::Rng rng(nn::Rng::derive(cfg.seed, 0x5a11e47ull));

    std::vector<Candidate> cands;
    if (cfg.grid_candidates) {
        cands.reserve(static_cast<size_t>(H) * W);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double nx = (x + 0.5) / W, ny = (y + 0.5) / H;
                cands.push_back({nx, ny, std::abs(activation.at(0, y, x))});
            }
    } else {
        const int n = static_cast<int>(std::ceil(cfg.oversample_ratio * k));
        cands.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double nx = rng.uniform(), ny = rng.uniform();
            cands.push_back({nx, ny, std::abs(activation_at(activation, nx, ny))});
        }
    }
    // Dedup exact coordinates before ranking.
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    cands.erase(std::unique(cands.begin(), cands.end(),
                            [](const Candidate& a, const Candidate& b) { return a.x == b.x && a.y == b.y; }),
                cands.end());
    sort_by_score(cands);

    const int n_importance = std::min(static_cast<int>(std::floor(cfg.importance_fraction * k)),
                                      static_cast<int>(cands.size()));
    std::vector<Candidate> chosen(cands.begin(), cands.begin() + n_importance);
    auto taken = [&chosen](double x, double y) {
        for (const auto& c : chosen)
            if (c.x == x && c.y == y) return true;
        return false;
    };
    // Fill the remainder with fresh uniform points for sampling diversity.
    while (static_cast<int>(chosen.size()) < k) {
        const double nx = rng.uniform(), ny = rng.uniform();
        if (taken(nx, ny)) continue;
        chosen.push_back({nx, ny, std::abs(activation_at(activation, nx, ny))});
    }

    SalientSelection sel;
    sel.coords = Tensor({k, 2});
    for (int i = 0; i < k; ++i) {
        sel.coords.at(i, 0) = chosen[static_cast<size_t>(i)].x;
        sel.coords.at(i, 1) = chosen[static_cast<size_t>(i)].y;
        sel.scores.push_back(chosen[static_cast<size_t>(i)].score);
    }
    return sel;
}

QueryInit::QueryInit(ParamStore& ps, const std::string& prefix, const ModelConfig& cfg, Rng& rng)
    : cfg_(cfg) {
    for (int l = 0; l < 3; ++l)
        integrate_.emplace_back(ps, prefix + ".int" + std::to_string(l), cfg.embed_dim, 1, 1, 1, 0, rng);
    const int n = cfg.num_queries, d = cfg.embed_dim;
    if (cfg.init_mask == InitStrategy::Random) {
        mask_embed_ = ps.create(prefix + ".mask_embed", nn::init::normal(rng, {n, d}, 0.0, 0.02));
        mask_pos_ = ps.create(prefix + ".mask_pos", nn::init::normal(rng, {n, d}, 0.0, 0.02));
    }
    if (cfg.init_boundary == InitStrategy::Random) {
        boundary_embed_ = ps.create(prefix + ".boundary_embed", nn::init::normal(rng, {n, d}, 0.0, 0.02));
        boundary_pos_ = ps.create(prefix + ".boundary_pos", nn::init::normal(rng, {n, d}, 0.0, 0.02));
    }
}

Var QueryInit::integrate_levels(const FeaturePyramid& mask_pyramid) const {
    const auto& l2 = mask_pyramid.by_stride(8);
    const int h2 = l2.feature->value.dim(1), w2 = l2.feature->value.dim(2);
    Var acc;
    const int strides[3] = {8, 16, 32};
    for (int l = 0; l < 3; ++l) {
        Var m = integrate_[static_cast<size_t>(l)].forward(mask_pyramid.by_stride(strides[l]).feature);
        if (m->value.dim(1) != h2 || m->value.dim(2) != w2) m = ops::bilinear_resize(m, h2, w2);
        acc = acc ? ops::add(acc, m) : m;
    }
    return acc;
}

QuerySet QueryInit::sample_salient_points(const Var& activation, const Var& level2_feature, int k,
                                          const SalientPointConfig& cfg) const {
    SalientSelection sel = select_salient_points(activation->value, k, cfg);
    QuerySet qs;
    qs.role = QueryRole::Mask;
    qs.n = k;
    qs.embeddings = ops::grid_sample(level2_feature, sel.coords);
    qs.positions = constant(nn::sine_embed_points(sel.coords, level2_feature->value.dim(0)));
    return qs;
}

QuerySet QueryInit::table_queries(QueryRole role) const {
    QuerySet qs;
    qs.role = role;
    qs.n = cfg_.num_queries;
    if (role == QueryRole::Mask) {
        qs.embeddings = mask_embed_;
        qs.positions = mask_pos_;
    } else {
        qs.embeddings = boundary_embed_;
        qs.positions = boundary_pos_;
    }
    return qs;
}

QuerySet QueryInit::mask_queries(const FeaturePyramid& mask_pyramid, uint64_t seed) const {
    if (cfg_.init_mask == InitStrategy::Random) return table_queries(QueryRole::Mask);
    SalientPointConfig sp;
    sp.oversample_ratio = cfg_.salient_oversample;
    sp.importance_fraction = cfg_.salient_importance;
    sp.seed = nn::Rng::derive(seed, 0x6d61736bull);
    Var act = integrate_levels(mask_pyramid);
    return sample_salient_points(act, mask_pyramid.by_stride(8).feature, cfg_.num_queries, sp);
}

QuerySet QueryInit::boundary_queries(const FeaturePyramid& mask_pyramid, uint64_t seed) const {
    if (cfg_.init_boundary == InitStrategy::Random) return table_queries(QueryRole::Boundary);
    SalientPointConfig sp;
    sp.oversample_ratio = cfg_.salient_oversample;
    sp.importance_fraction = cfg_.salient_importance;
    sp.seed = nn::Rng::derive(seed, 0x626f756eull);
    Var act = integrate_levels(mask_pyramid);
    QuerySet qs = sample_salient_points(act, mask_pyramid.by_stride(8).feature, cfg_.num_queries, sp);
    qs.role = QueryRole::Boundary;
    return qs;
}

QuerySet init_boundary_queries(ParamStore& ps, const std::string& prefix, int n, int d, uint64_t seed) {
    check_input(n > 0 && d > 0, "query table dimensions must be positive");
    nn::Rng rng(seed);
    QuerySet qs;
    qs.role = QueryRole::Boundary;
    qs.n = n;
    qs.embeddings = ps.create(prefix + ".embed", nn::init::normal(rng, {n, d}, 0.0, 0.02));
    qs.positions = ps.create(prefix + ".pos", nn::init::normal(rng, {n, d}, 0.0, 0.02));
    return qs;
}

}  // namespace camoseg::model
