#pragma once

#include <map>
#include <string>
#include <vector>

#include "camoseg/nn/autograd.hpp"
#include "camoseg/nn/rng.hpp"

namespace camoseg::nn {

// Flat name -> parameter registry. Iteration order is lexicographic, which
// pins optimizer update order, checkpoint layout, and gradient audits.
class ParamStore {
public:
    Var create(const std::string& name, Tensor init);
    Var get(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) > 0; }
    const std::map<std::string, Var>& all() const { return params_; }
    void zero_grads();
    int64_t total_count() const;

private:
    std::map<std::string, Var> params_;
};

namespace init {
Tensor kaiming_uniform(Rng& rng, std::vector<int> shape, int fan_in);
Tensor xavier_uniform(Rng& rng, std::vector<int> shape, int fan_in, int fan_out);
Tensor normal(Rng& rng, std::vector<int> shape, double mean, double std);
Tensor zeros(std::vector<int> shape);
Tensor ones(std::vector<int> shape);
}  // namespace init

struct Linear {
    Var w, b;  // w[out,in]
    Linear() = default;
    Linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng);
    Var forward(const Var& x) const { return ops::linear(x, w, b); }
};

struct Conv2d {
    Var w, b;  // w[out,in,kh,kw]
    int stride = 1, pad = 0;
    Conv2d() = default;
    Conv2d(ParamStore& ps, const std::string& prefix, int in, int out, int k, int stride, int pad, Rng& rng);
    Var forward(const Var& x) const { return ops::conv2d(x, w, b, stride, pad); }
};

struct LayerNorm {
    Var gamma, beta;
    LayerNorm() = default;
    LayerNorm(ParamStore& ps, const std::string& prefix, int dim);
    Var forward(const Var& x) const { return ops::layernorm_rows(x, gamma, beta); }
};

// MLP with ReLU between hidden layers and a bare final linear.
struct Mlp {
    std::vector<Linear> layers;
    Mlp() = default;
    Mlp(ParamStore& ps, const std::string& prefix, int in, int hidden, int out, int num_layers, Rng& rng);
    Var forward(const Var& x) const;
};

// Multi-head attention with input/output projections. Positions are added by
// the caller; this block only projects and attends.
struct MultiheadAttention {
    Linear q_proj, k_proj, v_proj, out_proj;
    int heads = 8;
    mutable Tensor last_probs;  // [heads*Nq, Nk] rows from the latest forward
    MultiheadAttention() = default;
    MultiheadAttention(ParamStore& ps, const std::string& prefix, int dim, int heads, Rng& rng);
    Var forward(const Var& q, const Var& k, const Var& v) const;
};

// Pre-norm residual cross-attention: x + MHA(LN(x)+pos_q, tokens+pos_t, tokens).
struct CrossAttentionLayer {
    LayerNorm norm;
    MultiheadAttention mha;
    CrossAttentionLayer() = default;
    CrossAttentionLayer(ParamStore& ps, const std::string& prefix, int dim, int heads, Rng& rng);
    Var forward(const Var& x, const Var& tokens, const Var& pos_q, const Var& pos_t) const;
};

// Pre-norm residual self-attention without positional terms.
struct SelfAttentionLayer {
    LayerNorm norm;
    MultiheadAttention mha;
    SelfAttentionLayer() = default;
    SelfAttentionLayer(ParamStore& ps, const std::string& prefix, int dim, int heads, Rng& rng);
    Var forward(const Var& x) const;
};

// Pre-norm residual feed-forward: x + W2(relu(W1(LN(x)))).
struct FeedForwardLayer {
    LayerNorm norm;
    Linear l1, l2;
    FeedForwardLayer() = default;
    FeedForwardLayer(ParamStore& ps, const std::string& prefix, int dim, int hidden, Rng& rng);
    Var forward(const Var& x) const;
};

}  // namespace camoseg::nn
