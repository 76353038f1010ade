#include "camoseg/nn/layers.hpp"

#include <cmath>

namespace camoseg::nn {

Var ParamStore::create(const std::string& name, Tensor init) {
    check_contract(!params_.count(name), "duplicate parameter: " + name);
    Var p = make_param(std::move(init));
    params_[name] = p;
    return p;
}

Var ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    check_contract(it != params_.end(), "unknown parameter: " + name);
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& [name, p] : params_) p->grad = Tensor();
}

int64_t ParamStore::total_count() const {
    int64_t n = 0;
    for (const auto& [name, p] : params_) n += p->value.numel();
    return n;
}

namespace init {

Tensor kaiming_uniform(Rng& rng, std::vector<int> shape, int fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (auto& v : t.v) v = rng.uniform(-bound, bound);
    return t;
}

Tensor xavier_uniform(Rng& rng, std::vector<int> shape, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(std::move(shape));
    for (auto& v : t.v) v = rng.uniform(-bound, bound);
    return t;
}

Tensor normal(Rng& rng, std::vector<int> shape, double mean, double std) {
    Tensor t(std::move(shape));
    for (auto& v : t.v) v = rng.normal(mean, std);
    return t;
}

Tensor zeros(std::vector<int> shape) { return Tensor::zeros(std::move(shape)); }

Tensor ones(std::vector<int> shape) { return Tensor::full(std::move(shape), 1.0); }

}  // namespace init

Linear::Linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng) {
    w = ps.create(prefix + ".weight", init::kaiming_uniform(rng, {out, in}, in));
    b = ps.create(prefix + ".bias", init::kaiming_uniform(rng, {out}, in));
}

Conv2d::Conv2d(ParamStore& ps, const std::string& prefix, int in, int out, int k, int stride_, int pad_, Rng& rng)
    : stride(stride_), pad(pad_) {
    const int fan_in = in * k * k;
    w = ps.create(prefix + ".weight", init::kaiming_uniform(rng, {out, in, k, k}, fan_in));
    b = ps.create(prefix + ".bias", init::kaiming_uniform(rng, {out}, fan_in));
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& prefix, int dim) {
    gamma = ps.create(prefix + ".gamma", init::ones({dim}));
    beta = ps.create(prefix + ".beta", init::zeros({dim}));
}

Mlp::Mlp(ParamStore& ps, const std::string& prefix, int in, int hidden, int out, int num_layers, Rng& rng) {
    for (int i = 0; i < num_layers; ++i) {
        const int li = i == 0 ? in : hidden;
        const int lo = i == num_layers - 1 ? out : hidden;
        layers.emplace_back(ps, prefix + ".l" + std::to_string(i), li, lo, rng);
    }
}

Var Mlp::forward(const Var& x) const {
    Var h = x;
    for (size_t i = 0; i < layers.size(); ++i) {
        h = layers[i].forward(h);
        if (i + 1 < layers.size()) h = ops::relu(h);
    }
    return h;
}

MultiheadAttention::MultiheadAttention(ParamStore& ps, const std::string& prefix, int dim, int heads_, Rng& rng)
    : heads(heads_) {
    check_contract(dim % heads_ == 0, "attention dim must be divisible by heads");
    q_proj = Linear(ps, prefix + ".q", dim, dim, rng);
    k_proj = Linear(ps, prefix + ".k", dim, dim, rng);
    v_proj = Linear(ps, prefix + ".v", dim, dim, rng);
    out_proj = Linear(ps, prefix + ".out", dim, dim, rng);
}

Var MultiheadAttention::forward(const Var& q, const Var& k, const Var& v) const {
    Var read = ops::attention(q_proj.forward(q), k_proj.forward(k), v_proj.forward(v), heads, &last_probs);
    return out_proj.forward(read);
}

CrossAttentionLayer::CrossAttentionLayer(ParamStore& ps, const std::string& prefix, int dim, int heads, Rng& rng)
    : norm(ps, prefix + ".norm", dim), mha(ps, prefix + ".mha", dim, heads, rng) {}

Var CrossAttentionLayer::forward(const Var& x, const Var& tokens, const Var& pos_q, const Var& pos_t) const {
    Var q = ops::add(norm.forward(x), pos_q);
    Var k = ops::add(tokens, pos_t);
    return ops::add(x, mha.forward(q, k, tokens));
}

SelfAttentionLayer::SelfAttentionLayer(ParamStore& ps, const std::string& prefix, int dim, int heads, Rng& rng)
    : norm(ps, prefix + ".norm", dim), mha(ps, prefix + ".mha", dim, heads, rng) {}

Var SelfAttentionLayer::forward(const Var& x) const {
    Var h = norm.forward(x);
    return ops::add(x, mha.forward(h, h, h));
}

FeedForwardLayer::FeedForwardLayer(ParamStore& ps, const std::string& prefix, int dim, int hidden, Rng& rng)
    : norm(ps, prefix + ".norm", dim),
      l1(ps, prefix + ".l1", dim, hidden, rng),
      l2(ps, prefix + ".l2", hidden, dim, rng) {}

Var FeedForwardLayer::forward(const Var& x) const {
    return ops::add(x, l2.forward(ops::relu(l1.forward(norm.forward(x)))));
}

}  // namespace camoseg::nn
