#include "camoseg/nn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "camoseg/nn/kernels.hpp"

namespace camoseg::nn {

namespace k = kernels;

Var constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    return n;
}

Var make_param(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = true;
    n->is_param = true;
    return n;
}

namespace {

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    n->requires_grad = rg;
    if (rg) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(fn);
    }
    return n;
}

void topo(const Var& v, std::unordered_set<Node*>& seen, std::vector<Var>& order) {
    if (!v->requires_grad || seen.count(v.get())) return;
    seen.insert(v.get());
    for (const auto& p : v->parents) topo(p, seen, order);
    order.push_back(v);
}

}  // namespace

void backward(const Var& root, const Tensor& seed) {
    check_contract(root->value.same_shape(const_cast<Tensor&>(seed)), "backward seed shape mismatch");
    std::unordered_set<Node*> seen;
    std::vector<Var> order;
    topo(root, seen, order);
    // Clear non-param grads from any previous pass reachable in this graph.
    for (auto& n : order)
        if (!n->is_param) n->grad = Tensor();
    root->ensure_grad();
    for (int64_t i = 0; i < seed.numel(); ++i) root->grad[i] += seed[i];
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node& n = **it;
        if (!n.backward_fn || !n.has_grad()) continue;
        for (auto& p : n.parents)
            if (p->requires_grad) p->ensure_grad();
        n.backward_fn(n);
    }
}

void backward(const Var& root) {
    check_contract(root->value.numel() == 1, "backward() root must be scalar");
    backward(root, Tensor::scalar(1.0));
}

namespace ops {

Var add(const Var& a, const Var& b) {
    check_contract(a->value.same_shape(b->value), "add: shape mismatch");
    Tensor y(a->value.shape);
    k::add(a->value.data(), b->value.data(), y.data(), y.numel());
    return make_op(std::move(y), {a, b}, [](Node& n) {
        for (int s = 0; s < 2; ++s)
            if (n.parents[static_cast<size_t>(s)]->requires_grad)
                k::axpy(1.0, n.grad.data(), n.parents[static_cast<size_t>(s)]->grad.data(), n.grad.numel());
    });
}

Var sub(const Var& a, const Var& b) { return add(a, scale(b, -1.0)); }

Var mul(const Var& a, const Var& b) {
    check_contract(a->value.same_shape(b->value), "mul: shape mismatch");
    Tensor y(a->value.shape);
    k::hadamard(a->value.data(), b->value.data(), y.data(), y.numel());
    return make_op(std::move(y), {a, b}, [](Node& n) {
        const auto& a = n.parents[0];
        const auto& b = n.parents[1];
        const int64_t m = n.grad.numel();
        if (a->requires_grad)
            for (int64_t i = 0; i < m; ++i) a->grad[i] += n.grad[i] * b->value[i];
        if (b->requires_grad)
            for (int64_t i = 0; i < m; ++i) b->grad[i] += n.grad[i] * a->value[i];
    });
}

Var div(const Var& a, const Var& b) {
    check_contract(a->value.same_shape(b->value), "div: shape mismatch");
    Tensor y(a->value.shape);
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = a->value[i] / b->value[i];
    return make_op(std::move(y), {a, b}, [](Node& n) {
        const auto& a = n.parents[0];
        const auto& b = n.parents[1];
        for (int64_t i = 0; i < n.grad.numel(); ++i) {
            const double inv = 1.0 / b->value[i];
            if (a->requires_grad) a->grad[i] += n.grad[i] * inv;
            if (b->requires_grad) b->grad[i] -= n.grad[i] * a->value[i] * inv * inv;
        }
    });
}

Var scale(const Var& a, double s) {
    Tensor y(a->value.shape);
    k::scale(a->value.data(), s, y.data(), y.numel());
    return make_op(std::move(y), {a}, [s](Node& n) {
        if (n.parents[0]->requires_grad) k::axpy(s, n.grad.data(), n.parents[0]->grad.data(), n.grad.numel());
    });
}

Var add_scalar(const Var& a, double s) {
    Tensor y(a->value.shape);
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = a->value[i] + s;
    return make_op(std::move(y), {a}, [](Node& n) {
        if (n.parents[0]->requires_grad) k::axpy(1.0, n.grad.data(), n.parents[0]->grad.data(), n.grad.numel());
    });
}

Var reshape(const Var& a, std::vector<int> shape) {
    Tensor y = a->value.reshaped(std::move(shape));
    return make_op(std::move(y), {a}, [](Node& n) {
        if (n.parents[0]->requires_grad) k::axpy(1.0, n.grad.data(), n.parents[0]->grad.data(), n.grad.numel());
    });
}

Var matmul(const Var& a, const Var& b) {
    check_contract(a->value.rank() == 2 && b->value.rank() == 2 && a->value.dim(1) == b->value.dim(0),
                   "matmul: bad shapes " + a->value.shape_str() + " x " + b->value.shape_str());
    const int M = a->value.dim(0), K = a->value.dim(1), N = b->value.dim(1);
    Tensor y({M, N});
    k::matmul(a->value.data(), b->value.data(), y.data(), M, K, N);
    return make_op(std::move(y), {a, b}, [M, K, N](Node& n) {
        const auto& a = n.parents[0];
        const auto& b = n.parents[1];
        if (a->requires_grad) {
            Tensor ga({M, K});
            k::matmul_bt(n.grad.data(), b->value.data(), ga.data(), M, N, K);
            k::axpy(1.0, ga.data(), a->grad.data(), ga.numel());
        }
        if (b->requires_grad) {
            Tensor gb({K, N});
            k::matmul_at(a->value.data(), n.grad.data(), gb.data(), M, K, N);
            k::axpy(1.0, gb.data(), b->grad.data(), gb.numel());
        }
    });
}

Var linear(const Var& x, const Var& w, const Var& b) {
    const int M = x->value.dim(0), in = x->value.dim(1), out = w->value.dim(0);
    check_contract(w->value.dim(1) == in && b->value.numel() == out, "linear: bad shapes");
    Tensor y({M, out});
    k::matmul_bt(x->value.data(), w->value.data(), y.data(), M, in, out);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < out; ++j) y.at(i, j) += b->value[j];
    return make_op(std::move(y), {x, w, b}, [M, in, out](Node& n) {
        const auto& x = n.parents[0];
        const auto& w = n.parents[1];
        const auto& b = n.parents[2];
        if (x->requires_grad) {
            Tensor gx({M, in});
            k::matmul(n.grad.data(), w->value.data(), gx.data(), M, out, in);
            k::axpy(1.0, gx.data(), x->grad.data(), gx.numel());
        }
        if (w->requires_grad) {
            Tensor gw({out, in});
            k::matmul_at(n.grad.data(), x->value.data(), gw.data(), M, out, in);
            k::axpy(1.0, gw.data(), w->grad.data(), gw.numel());
        }
        if (b->requires_grad) {
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < out; ++j) b->grad[j] += n.grad.at(i, j);
        }
    });
}

Var relu(const Var& x) {
    Tensor y(x->value.shape);
    k::relu_forward(x->value.data(), y.data(), y.numel());
    return make_op(std::move(y), {x}, [](Node& n) {
        if (n.parents[0]->requires_grad)
            k::relu_backward(n.parents[0]->value.data(), n.grad.data(), n.parents[0]->grad.data(), n.grad.numel());
    });
}

Var sigmoid(const Var& x) {
    Tensor y(x->value.shape);
    k::sigmoid_forward(x->value.data(), y.data(), y.numel());
    return make_op(std::move(y), {x}, [](Node& n) {
        if (n.parents[0]->requires_grad)
            for (int64_t i = 0; i < n.grad.numel(); ++i)
                n.parents[0]->grad[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
    });
}

Var softmax_rows(const Var& x) {
    check_contract(x->value.rank() == 2, "softmax_rows expects [M,N]");
    const int M = x->value.dim(0), N = x->value.dim(1);
    Tensor y({M, N});
    k::softmax_rows(x->value.data(), y.data(), M, N);
    return make_op(std::move(y), {x}, [M, N](Node& n) {
        if (n.parents[0]->requires_grad)
            k::softmax_rows_backward(n.value.data(), n.grad.data(), n.parents[0]->grad.data(), M, N);
    });
}

Var layernorm_rows(const Var& x, const Var& gamma, const Var& beta) {
    const int M = x->value.dim(0), N = x->value.dim(1);
    Tensor y({M, N});
    auto mean = std::make_shared<Tensor>(Tensor({M}));
    auto rstd = std::make_shared<Tensor>(Tensor({M}));
    k::layernorm_rows(x->value.data(), gamma->value.data(), beta->value.data(), y.data(),
                      mean->data(), rstd->data(), M, N, 1e-5);
    return make_op(std::move(y), {x, gamma, beta}, [M, N, mean, rstd](Node& n) {
        const auto& x = n.parents[0];
        const auto& g = n.parents[1];
        const auto& b = n.parents[2];
        Tensor gg({N}), gb({N});
        Tensor gx({M, N});
        k::layernorm_rows_backward(x->value.data(), g->value.data(), mean->data(), rstd->data(),
                                   n.grad.data(), gx.data(), gg.data(), gb.data(), M, N);
        if (x->requires_grad) k::axpy(1.0, gx.data(), x->grad.data(), gx.numel());
        if (g->requires_grad) k::axpy(1.0, gg.data(), g->grad.data(), gg.numel());
        if (b->requires_grad) k::axpy(1.0, gb.data(), b->grad.data(), gb.numel());
    });
}

Var sum(const Var& x) {
    double s = 0.0;
    for (int64_t i = 0; i < x->value.numel(); ++i) s += x->value[i];
    return make_op(Tensor::scalar(s), {x}, [](Node& n) {
        if (n.parents[0]->requires_grad) {
            const double g = n.grad[0];
            for (int64_t i = 0; i < n.parents[0]->grad.numel(); ++i) n.parents[0]->grad[i] += g;
        }
    });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x->value.numel())); }

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    check_contract(x->value.rank() == 3 && w->value.rank() == 4, "conv2d: bad ranks");
    const int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    const int O = w->value.dim(0), kh = w->value.dim(2), kw = w->value.dim(3);
    check_contract(w->value.dim(1) == C, "conv2d: channel mismatch");
    const int OH = (H + 2 * pad - kh) / stride + 1;
    const int OW = (W + 2 * pad - kw) / stride + 1;
    Tensor y({O, OH, OW});
    k::conv2d_forward(x->value.data(), w->value.data(), b ? b->value.data() : nullptr, y.data(),
                      C, H, W, O, kh, kw, stride, pad, OH, OW);
    std::vector<Var> parents = {x, w};
    if (b) parents.push_back(b);
    return make_op(std::move(y), std::move(parents), [C, H, W, O, kh, kw, stride, pad, OH, OW](Node& n) {
        const auto& x = n.parents[0];
        const auto& w = n.parents[1];
        Var b = n.parents.size() > 2 ? n.parents[2] : nullptr;
        if (x->requires_grad)
            k::conv2d_backward_input(n.grad.data(), w->value.data(), x->grad.data(),
                                     C, H, W, O, kh, kw, stride, pad, OH, OW);
        if (w->requires_grad || (b && b->requires_grad))
            k::conv2d_backward_weight(n.grad.data(), x->value.data(),
                                      w->requires_grad ? w->grad.data() : Tensor(w->value.shape).data(),
                                      b && b->requires_grad ? b->grad.data() : nullptr,
                                      C, H, W, O, kh, kw, stride, pad, OH, OW);
    });
}

Var bilinear_resize(const Var& x, int oh, int ow) {
    const int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    Tensor y({C, oh, ow});
    k::bilinear_resize_forward(x->value.data(), y.data(), C, H, W, oh, ow);
    return make_op(std::move(y), {x}, [C, H, W, oh, ow](Node& n) {
        if (n.parents[0]->requires_grad)
            k::bilinear_resize_backward(n.grad.data(), n.parents[0]->grad.data(), C, H, W, oh, ow);
    });
}

Var grid_sample(const Var& x, const Tensor& pts) {
    const int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    const int P = pts.dim(0);
    Tensor y({P, C});
    k::grid_sample_forward(x->value.data(), pts.data(), y.data(), C, H, W, P);
    auto pts_copy = std::make_shared<Tensor>(pts);
    return make_op(std::move(y), {x}, [C, H, W, P, pts_copy](Node& n) {
        if (n.parents[0]->requires_grad)
            k::grid_sample_backward_values(n.grad.data(), pts_copy->data(), n.parents[0]->grad.data(),
                                           C, H, W, P);
    });
}

namespace {
Var extremum_filter(const Var& x, bool take_max) {
    const int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    Tensor y({C, H, W});
    auto arg = std::make_shared<std::vector<int32_t>>(static_cast<size_t>(C) * H * W);
    k::extremum_filter3(x->value.data(), y.data(), arg->data(), C, H, W, take_max);
    return make_op(std::move(y), {x}, [C, H, W, arg](Node& n) {
        if (n.parents[0]->requires_grad)
            k::extremum_filter3_backward(n.grad.data(), arg->data(), n.parents[0]->grad.data(), C, H, W);
    });
}
}  // namespace

Var min_filter3(const Var& x) { return extremum_filter(x, false); }
Var max_filter3(const Var& x) { return extremum_filter(x, true); }

Var chw_to_tokens(const Var& x) {
    const int D = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    Tensor y({H * W, D});
    for (int d = 0; d < D; ++d)
        for (int p = 0; p < H * W; ++p) y.at(p, d) = x->value[static_cast<int64_t>(d) * H * W + p];
    return make_op(std::move(y), {x}, [D, H, W](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        for (int d = 0; d < D; ++d)
            for (int p = 0; p < H * W; ++p)
                n.parents[0]->grad[static_cast<int64_t>(d) * H * W + p] += n.grad.at(p, d);
    });
}

Var tokens_to_chw(const Var& x, int d, int h, int w) {
    check_contract(x->value.dim(0) == h * w && x->value.dim(1) == d, "tokens_to_chw shape mismatch");
    Tensor y({d, h, w});
    for (int c = 0; c < d; ++c)
        for (int p = 0; p < h * w; ++p) y[static_cast<int64_t>(c) * h * w + p] = x->value.at(p, c);
    return make_op(std::move(y), {x}, [d, h, w](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        for (int c = 0; c < d; ++c)
            for (int p = 0; p < h * w; ++p)
                n.parents[0]->grad.at(p, c) += n.grad[static_cast<int64_t>(c) * h * w + p];
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    check_contract(!parts.empty(), "concat_rows: empty");
    const int D = parts[0]->value.dim(1);
    int rows = 0;
    for (const auto& p : parts) {
        check_contract(p->value.dim(1) == D, "concat_rows: width mismatch");
        rows += p->value.dim(0);
    }
    Tensor y({rows, D});
    int off = 0;
    for (const auto& p : parts) {
        std::copy(p->value.v.begin(), p->value.v.end(), y.v.begin() + static_cast<int64_t>(off) * D);
        off += p->value.dim(0);
    }
    return make_op(std::move(y), std::vector<Var>(parts), [D](Node& n) {
        int off = 0;
        for (auto& p : n.parents) {
            const int r = p->value.dim(0);
            if (p->requires_grad)
                for (int64_t i = 0; i < static_cast<int64_t>(r) * D; ++i)
                    p->grad[i] += n.grad[static_cast<int64_t>(off) * D + i];
            off += r;
        }
    });
}

Var broadcast_rows(const Var& v, int rows) {
    check_contract(v->value.rank() == 1, "broadcast_rows expects [D]");
    const int D = v->value.dim(0);
    Tensor y({rows, D});
    for (int r = 0; r < rows; ++r)
        std::copy(v->value.v.begin(), v->value.v.end(), y.v.begin() + static_cast<int64_t>(r) * D);
    return make_op(std::move(y), {v}, [rows, D](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        for (int r = 0; r < rows; ++r)
            for (int d = 0; d < D; ++d) n.parents[0]->grad[d] += n.grad.at(r, d);
    });
}

Var gather_rows(const Var& x, const std::vector<int>& rows) {
    const int D = x->value.dim(1);
    Tensor y({static_cast<int>(rows.size()), D});
    for (size_t r = 0; r < rows.size(); ++r)
        std::copy(x->value.v.begin() + static_cast<int64_t>(rows[r]) * D,
                  x->value.v.begin() + static_cast<int64_t>(rows[r] + 1) * D,
                  y.v.begin() + static_cast<int64_t>(r) * D);
    auto idx = std::make_shared<std::vector<int>>(rows);
    return make_op(std::move(y), {x}, [idx, D](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        for (size_t r = 0; r < idx->size(); ++r)
            for (int d = 0; d < D; ++d)
                n.parents[0]->grad.at((*idx)[r], d) += n.grad.at(static_cast<int>(r), d);
    });
}

Var slice_rows(const Var& x, int begin, int count) {
    const int D = x->value.dim(1);
    Tensor y({count, D});
    std::copy(x->value.v.begin() + static_cast<int64_t>(begin) * D,
              x->value.v.begin() + static_cast<int64_t>(begin + count) * D, y.v.begin());
    return make_op(std::move(y), {x}, [begin, D](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        for (int64_t i = 0; i < n.grad.numel(); ++i)
            n.parents[0]->grad[static_cast<int64_t>(begin) * D + i] += n.grad[i];
    });
}

Var attention(const Var& q, const Var& k_in, const Var& v, int heads, Tensor* probs_out) {
    const int Nq = q->value.dim(0), D = q->value.dim(1), Nk = k_in->value.dim(0);
    check_contract(D % heads == 0, "attention: heads must divide dim");
    const int hd = D / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(hd));
    auto probs = std::make_shared<Tensor>(Tensor({heads * Nq, Nk}));
    Tensor y({Nq, D});
    for (int h = 0; h < heads; ++h) {
        const int off = h * hd;
        Tensor scores({Nq, Nk});
        const bool par = k::run_parallel(static_cast<int64_t>(Nq) * Nk * hd);
#pragma omp parallel for schedule(static) if (par)
        for (int i = 0; i < Nq; ++i)
            for (int j = 0; j < Nk; ++j) {
                double dot = 0.0;
                for (int d = 0; d < hd; ++d) dot += q->value.at(i, off + d) * k_in->value.at(j, off + d);
                scores.at(i, j) = dot * inv;
            }
        double* prow = probs->data() + static_cast<int64_t>(h) * Nq * Nk;
        k::softmax_rows(scores.data(), prow, Nq, Nk);
#pragma omp parallel for schedule(static) if (par)
        for (int i = 0; i < Nq; ++i)
            for (int d = 0; d < hd; ++d) {
                double acc = 0.0;
                for (int j = 0; j < Nk; ++j) acc += prow[static_cast<int64_t>(i) * Nk + j] * v->value.at(j, off + d);
                y.at(i, off + d) = acc;
            }
    }
    if (probs_out) *probs_out = *probs;
    return make_op(std::move(y), {q, k_in, v}, [Nq, Nk, D, heads, hd, inv, probs](Node& n) {
        const auto& q = n.parents[0];
        const auto& kk = n.parents[1];
        const auto& v = n.parents[2];
        for (int h = 0; h < heads; ++h) {
            const int off = h * hd;
            const double* prow = probs->data() + static_cast<int64_t>(h) * Nq * Nk;
            Tensor dprobs({Nq, Nk});
            for (int i = 0; i < Nq; ++i)
                for (int j = 0; j < Nk; ++j) {
                    double acc = 0.0;
                    for (int d = 0; d < hd; ++d) acc += n.grad.at(i, off + d) * v->value.at(j, off + d);
                    dprobs.at(i, j) = acc;
                }
            if (v->requires_grad) {
                for (int j = 0; j < Nk; ++j)
                    for (int d = 0; d < hd; ++d) {
                        double acc = 0.0;
                        for (int i = 0; i < Nq; ++i) acc += prow[static_cast<int64_t>(i) * Nk + j] * n.grad.at(i, off + d);
                        v->grad.at(j, off + d) += acc;
                    }
            }
            Tensor dscores({Nq, Nk});
            k::softmax_rows_backward(prow, dprobs.data(), dscores.data(), Nq, Nk);
            if (q->requires_grad) {
                for (int i = 0; i < Nq; ++i)
                    for (int d = 0; d < hd; ++d) {
                        double acc = 0.0;
                        for (int j = 0; j < Nk; ++j) acc += dscores.at(i, j) * kk->value.at(j, off + d);
                        q->grad.at(i, off + d) += acc * inv;
                    }
            }
            if (kk->requires_grad) {
                for (int j = 0; j < Nk; ++j)
                    for (int d = 0; d < hd; ++d) {
                        double acc = 0.0;
                        for (int i = 0; i < Nq; ++i) acc += dscores.at(i, j) * q->value.at(i, off + d);
                        kk->grad.at(j, off + d) += acc * inv;
                    }
            }
        }
    });
}

namespace {
struct DeformGeom {
    std::vector<int> hs, ws;
    int heads, points, levels, hd;
};

inline void deform_sample_one(const DeformGeom& g, const std::vector<Tensor*>& vals,
                              double refx, double refy, const double* off, const double* wts,
                              int head, double* acc /*hd*/) {
    const int hd = g.hd;
    for (int l = 0; l < g.levels; ++l) {
        const int H = g.hs[static_cast<size_t>(l)], W = g.ws[static_cast<size_t>(l)];
        const Tensor& vm = *vals[static_cast<size_t>(l)];
        for (int p = 0; p < g.points; ++p) {
            const int idx = (head * g.levels + l) * g.points + p;
            const double px = std::clamp(refx * W - 0.5 + off[2 * idx], 0.0, static_cast<double>(W - 1));
            const double py = std::clamp(refy * H - 0.5 + off[2 * idx + 1], 0.0, static_cast<double>(H - 1));
            const int x0 = std::clamp(static_cast<int>(std::floor(px)), 0, W - 1);
            const int y0 = std::clamp(static_cast<int>(std::floor(py)), 0, H - 1);
            const int x1 = std::min(x0 + 1, W - 1);
            const int y1 = std::min(y0 + 1, H - 1);
            const double fx = px - x0, fy = py - y0;
            const double w = wts[idx];
            for (int d = 0; d < hd; ++d) {
                const double* ch = vm.data() + (static_cast<int64_t>(head) * hd + d) * H * W;
                const double s = (1 - fy) * ((1 - fx) * ch[static_cast<int64_t>(y0) * W + x0] + fx * ch[static_cast<int64_t>(y0) * W + x1]) +
                                 fy * ((1 - fx) * ch[static_cast<int64_t>(y1) * W + x0] + fx * ch[static_cast<int64_t>(y1) * W + x1]);
                acc[d] += w * s;
            }
        }
    }
}
}  // namespace

Var deformable_sample(const std::vector<Var>& values, const Var& offsets, const Var& weights,
                      const Tensor& ref, int heads, int points) {
    const int L = static_cast<int>(values.size());
    const int D = values[0]->value.dim(0);
    const int Q = offsets->value.dim(0);
    check_contract(D % heads == 0, "deformable_sample: heads must divide dim");
    const int hd = D / heads;
    check_contract(offsets->value.dim(1) == heads * L * points * 2, "deformable_sample: offsets shape");
    check_contract(weights->value.dim(1) == heads * L * points, "deformable_sample: weights shape");
    auto geom = std::make_shared<DeformGeom>();
    geom->heads = heads;
    geom->points = points;
    geom->levels = L;
    geom->hd = hd;
    for (const auto& v : values) {
        geom->hs.push_back(v->value.dim(1));
        geom->ws.push_back(v->value.dim(2));
    }
    std::vector<Tensor*> vals;
    for (const auto& v : values) vals.push_back(&v->value);
    auto ref_copy = std::make_shared<Tensor>(ref);

    Tensor y({Q, D});
    const bool par = k::run_parallel(static_cast<int64_t>(Q) * heads * L * points * hd);
#pragma omp parallel for schedule(static) if (par)
    for (int q = 0; q < Q; ++q) {
        const double* off = offsets->value.data() + static_cast<int64_t>(q) * heads * L * points * 2;
        const double* wts = weights->value.data() + static_cast<int64_t>(q) * heads * L * points;
        for (int h = 0; h < heads; ++h)
            deform_sample_one(*geom, vals, ref.at(q, 0), ref.at(q, 1), off, wts, h,
                              y.data() + static_cast<int64_t>(q) * D + h * hd);
    }

    std::vector<Var> parents = values;
    parents.push_back(offsets);
    parents.push_back(weights);
    return make_op(std::move(y), std::move(parents), [geom, ref_copy, heads, points](Node& n) {
        const int L = geom->levels, hd = geom->hd;
        const int Q = n.value.dim(0);
        const Var& offsets = n.parents[static_cast<size_t>(L)];
        const Var& weights = n.parents[static_cast<size_t>(L) + 1];
        // Serial: value gradients scatter into shared maps.
        for (int q = 0; q < Q; ++q) {
            const double* off = offsets->value.data() + static_cast<int64_t>(q) * heads * L * points * 2;
            const double* wts = weights->value.data() + static_cast<int64_t>(q) * heads * L * points;
            const double refx = ref_copy->at(q, 0), refy = ref_copy->at(q, 1);
            for (int h = 0; h < heads; ++h) {
                const double* g = n.grad.data() + static_cast<int64_t>(q) * n.value.dim(1) + h * hd;
                for (int l = 0; l < L; ++l) {
                    const int H = geom->hs[static_cast<size_t>(l)], W = geom->ws[static_cast<size_t>(l)];
                    Var vm = n.parents[static_cast<size_t>(l)];
                    for (int p = 0; p < points; ++p) {
                        const int idx = (h * L + l) * points + p;
                        const double rx = refx * W - 0.5 + off[2 * idx];
                        const double ry = refy * H - 0.5 + off[2 * idx + 1];
                        const double px = std::clamp(rx, 0.0, static_cast<double>(W - 1));
                        const double py = std::clamp(ry, 0.0, static_cast<double>(H - 1));
                        const bool inx = rx > 0.0 && rx < static_cast<double>(W - 1);
                        const bool iny = ry > 0.0 && ry < static_cast<double>(H - 1);
                        const int x0 = std::clamp(static_cast<int>(std::floor(px)), 0, W - 1);
                        const int y0 = std::clamp(static_cast<int>(std::floor(py)), 0, H - 1);
                        const int x1 = std::min(x0 + 1, W - 1);
                        const int y1 = std::min(y0 + 1, H - 1);
                        const double fx = px - x0, fy = py - y0;
                        const double w = wts[idx];
                        double gw = 0.0, gx = 0.0, gy = 0.0;
                        for (int d = 0; d < hd; ++d) {
                            const int64_t base = (static_cast<int64_t>(h) * hd + d) * H * W;
                            const double* ch = vm->value.data() + base;
                            const double v00 = ch[static_cast<int64_t>(y0) * W + x0];
                            const double v01 = ch[static_cast<int64_t>(y0) * W + x1];
                            const double v10 = ch[static_cast<int64_t>(y1) * W + x0];
                            const double v11 = ch[static_cast<int64_t>(y1) * W + x1];
                            const double s = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
                            gw += g[d] * s;
                            gx += g[d] * w * ((1 - fy) * (v01 - v00) + fy * (v11 - v10));
                            gy += g[d] * w * ((1 - fx) * (v10 - v00) + fx * (v11 - v01));
                            if (vm->requires_grad) {
                                double* gch = vm->grad.data() + base;
                                const double gv = g[d] * w;
                                gch[static_cast<int64_t>(y0) * W + x0] += (1 - fy) * (1 - fx) * gv;
                                gch[static_cast<int64_t>(y0) * W + x1] += (1 - fy) * fx * gv;
                                gch[static_cast<int64_t>(y1) * W + x0] += fy * (1 - fx) * gv;
                                gch[static_cast<int64_t>(y1) * W + x1] += fy * fx * gv;
                            }
                        }
                        if (weights->requires_grad)
                            weights->grad[static_cast<int64_t>(q) * heads * L * points + idx] += gw;
                        if (offsets->requires_grad) {
                            offsets->grad[static_cast<int64_t>(q) * heads * L * points * 2 + 2 * idx] += inx ? gx : 0.0;
                            offsets->grad[static_cast<int64_t>(q) * heads * L * points * 2 + 2 * idx + 1] += iny ? gy : 0.0;
                        }
                    }
                }
            }
        }
    });
}

Var bce_with_logits_mean(const Var& logits, const Tensor& targets) {
    const int64_t K = logits->value.numel();
    check_contract(targets.numel() == K, "bce: target size mismatch");
    double acc = 0.0;
    for (int64_t i = 0; i < K; ++i) {
        const double x = logits->value[i];
        const double t = targets[i];
        acc += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
    }
    auto t_copy = std::make_shared<Tensor>(targets);
    return make_op(Tensor::scalar(acc / static_cast<double>(K)), {logits}, [t_copy, K](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        const double g = n.grad[0] / static_cast<double>(K);
        for (int64_t i = 0; i < K; ++i) {
            const double x = n.parents[0]->value[i];
            const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
            n.parents[0]->grad[i] += g * (s - (*t_copy)[i]);
        }
    });
}

Var dice_from_logits(const Var& logits, const Tensor& targets, double eps) {
    Var p = sigmoid(reshape(logits, {static_cast<int>(logits->value.numel())}));
    Var t = constant(targets.reshaped({static_cast<int>(targets.numel())}));
    Var inter = sum(mul(p, t));
    double tsum = 0.0;
    for (int64_t i = 0; i < targets.numel(); ++i) tsum += targets[i];
    Var num = add_scalar(scale(inter, 2.0), eps);
    Var den = add_scalar(sum(p), tsum + eps);
    return add_scalar(scale(div(num, den), -1.0), 1.0);
}

}  // namespace ops

}  // namespace camoseg::nn
