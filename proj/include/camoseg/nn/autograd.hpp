#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "camoseg/nn/tensor.hpp"

namespace camoseg::nn {

// Reverse-mode autodiff on a dynamically built graph. Nodes own their value;
// gradients are allocated lazily during backward(). Parameters are ordinary
// nodes flagged is_param whose grads persist until zeroed by the optimizer.
class Node {
public:
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool is_param = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this->grad and accumulates into the parents' grads.
    std::function<void(Node&)> backward_fn;

    bool has_grad() const { return grad.numel() == value.numel() && grad.numel() > 0; }
    void ensure_grad() {
        if (!has_grad()) grad = Tensor::zeros(value.shape);
    }
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor t);
Var make_param(Tensor t);

// Runs reverse-mode accumulation from a scalar root (grad seeded to 1), or
// from any root with an explicit seed gradient.
void backward(const Var& root);
void backward(const Var& root, const Tensor& seed);

namespace ops {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var reshape(const Var& a, std::vector<int> shape);

Var matmul(const Var& a, const Var& b);            // [M,K]x[K,N]
Var linear(const Var& x, const Var& w, const Var& b);  // x[M,in], w[out,in], b[out] -> [M,out]

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var softmax_rows(const Var& x);
Var layernorm_rows(const Var& x, const Var& gamma, const Var& beta);

Var sum(const Var& x);   // -> [1]
Var mean(const Var& x);  // -> [1]

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var bilinear_resize(const Var& x, int oh, int ow);
// Samples x[C,H,W] at fixed normalized points [P,2] -> [P,C].
Var grid_sample(const Var& x, const Tensor& pts);
Var min_filter3(const Var& x);
Var max_filter3(const Var& x);

// [D,H,W] -> [H*W,D] token layout and back.
Var chw_to_tokens(const Var& x);
Var tokens_to_chw(const Var& x, int d, int h, int w);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& x, int begin, int count);
// Repeats a [D] vector into [rows, D]; backward sums over rows.
Var broadcast_rows(const Var& v, int rows);
// out[r] = x[rows[r]]; indices may repeat.
Var gather_rows(const Var& x, const std::vector<int>& rows);

// Fused dense multi-head attention on already-projected q/k/v of width D.
// probs_out, when given, receives the [heads*Nq, Nk] attention rows.
Var attention(const Var& q, const Var& k, const Var& v, int heads, Tensor* probs_out = nullptr);

// Fused multi-scale deformable sampling. values: per-level [D,H,W] maps with
// D = heads*head_dim; offsets [Q, heads*L*P*2] in pixels of each level;
// weights [Q, heads*L*P] (already softmaxed per head); ref [Q,2] normalized.
Var deformable_sample(const std::vector<Var>& values, const Var& offsets, const Var& weights,
                      const Tensor& ref, int heads, int points);

// mean_k max(x,0) - x*t + log(1+exp(-|x|)) over logits [K] with binary t.
Var bce_with_logits_mean(const Var& logits, const Tensor& targets);
// 1 - (2*sum(p*t)+eps)/(sum(p)+sum(t)+eps) with p = sigmoid(logits).
Var dice_from_logits(const Var& logits, const Tensor& targets, double eps = 1.0);

}  // namespace ops

}  // namespace camoseg::nn
