#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "camoseg/nn/autograd.hpp"
#include "camoseg/nn/kernels.hpp"
#include "camoseg/nn/layers.hpp"
#include "camoseg/nn/optim.hpp"
#include "camoseg/nn/posenc.hpp"
#include "camoseg/nn/reference.hpp"
#include "camoseg/nn/rng.hpp"

using namespace camoseg::nn;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.v) v = rng.uniform(lo, hi);
    return t;
}

// Central finite difference of a scalar-valued rebuildable graph w.r.t. one
// entry of a leaf tensor.
double fd_grad(const std::function<double()>& eval, double* slot, double eps = 1e-6) {
    const double orig = *slot;
    *slot = orig + eps;
    const double up = eval();
    *slot = orig - eps;
    const double dn = eval();
    *slot = orig;
    return (up - dn) / (2.0 * eps);
}

void check_grad_matches(const Var& leaf, const std::function<Var()>& build, double tol = 1e-6) {
    leaf->grad = Tensor();  // param grads persist across backward passes
    Var loss = build();
    backward(loss);
    Rng pick(123);
    for (int trial = 0; trial < 5; ++trial) {
        const int64_t i = pick.uniform_int(static_cast<int>(leaf->value.numel()));
        const double analytic = leaf->grad[i];
        const double fd = fd_grad([&] { return build()->value[0]; }, &leaf->value[i]);
        const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
        CHECK(std::abs(analytic - fd) / denom < tol);
    }
}

}  // namespace

TEST_CASE("kernel parallel mode is bit-identical to serial") {
    Rng rng(42);
    Tensor a = random_tensor(rng, {37, 29});
    Tensor b = random_tensor(rng, {29, 41});
    Tensor x = random_tensor(rng, {5, 33, 31});
    Tensor w = random_tensor(rng, {7, 5, 3, 3});
    Tensor bias = random_tensor(rng, {7});
    Tensor pts({64, 2});
    for (auto& v : pts.v) v = rng.uniform();

    auto run_all = [&]() {
        std::vector<Tensor> outs;
        Tensor c({37, 41});
        kernels::matmul(a.data(), b.data(), c.data(), 37, 29, 41);
        outs.push_back(c);
        Tensor y({7, 17, 16});
        kernels::conv2d_forward(x.data(), w.data(), bias.data(), y.data(), 5, 33, 31, 7, 3, 3, 2, 1, 17, 16);
        outs.push_back(y);
        Tensor e({5, 33, 31});
        kernels::extremum_filter3(x.data(), e.data(), nullptr, 5, 33, 31, true);
        outs.push_back(e);
        Tensor r({5, 48, 52});
        kernels::bilinear_resize_forward(x.data(), r.data(), 5, 33, 31, 48, 52);
        outs.push_back(r);
        Tensor g({64, 5});
        kernels::grid_sample_forward(x.data(), pts.data(), g.data(), 5, 33, 31, 64);
        outs.push_back(g);
        Tensor s({37, 29});
        kernels::softmax_rows(a.data(), s.data(), 37, 29);
        outs.push_back(s);
        return outs;
    };

    kernels::set_mode(kernels::Mode::Serial);
    auto serial = run_all();
    kernels::set_mode(kernels::Mode::Parallel);
    auto parallel = run_all();
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i)
        for (int64_t j = 0; j < serial[i].numel(); ++j) CHECK(serial[i][j] == parallel[i][j]);
}

TEST_CASE("kernels agree with naive references") {
    Rng rng(7);
    Tensor a = random_tensor(rng, {19, 23});
    Tensor b = random_tensor(rng, {23, 17});
    Tensor c1({19, 17}), c2({19, 17});
    kernels::matmul(a.data(), b.data(), c1.data(), 19, 23, 17);
    reference::matmul(a.data(), b.data(), c2.data(), 19, 23, 17);
    for (int64_t i = 0; i < c1.numel(); ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));

    Tensor x = random_tensor(rng, {4, 21, 19});
    Tensor w = random_tensor(rng, {6, 4, 3, 3});
    Tensor bias = random_tensor(rng, {6});
    Tensor y1({6, 11, 10}), y2({6, 11, 10});
    kernels::conv2d_forward(x.data(), w.data(), bias.data(), y1.data(), 4, 21, 19, 6, 3, 3, 2, 1, 11, 10);
    reference::conv2d(x.data(), w.data(), bias.data(), y2.data(), 4, 21, 19, 6, 3, 3, 2, 1, 11, 10);
    for (int64_t i = 0; i < y1.numel(); ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-12));

    Tensor e1({4, 21, 19}), e2({4, 21, 19});
    kernels::extremum_filter3(x.data(), e1.data(), nullptr, 4, 21, 19, false);
    reference::extremum_filter3(x.data(), e2.data(), 4, 21, 19, false);
    for (int64_t i = 0; i < e1.numel(); ++i) CHECK(e1[i] == e2[i]);

    Tensor r1({4, 30, 28}), r2({4, 30, 28});
    kernels::bilinear_resize_forward(x.data(), r1.data(), 4, 21, 19, 30, 28);
    reference::bilinear_resize(x.data(), r2.data(), 4, 21, 19, 30, 28);
    for (int64_t i = 0; i < r1.numel(); ++i) CHECK(r1[i] == doctest::Approx(r2[i]).epsilon(1e-12));
}

TEST_CASE("autograd matches finite differences on composite graphs") {
    Rng rng(11);
    Var x = make_param(random_tensor(rng, {6, 5}));
    Var w = make_param(random_tensor(rng, {4, 5}));
    Var b = make_param(random_tensor(rng, {4}));
    auto build = [&] {
        Var h = ops::relu(ops::linear(x, w, b));
        Var s = ops::softmax_rows(h);
        return ops::mean(ops::mul(s, s));
    };
    check_grad_matches(x, build, 1e-5);
    check_grad_matches(w, build, 1e-5);

    Var g = make_param(Tensor::full({5}, 1.0));
    Var beta = make_param(Tensor::zeros({5}));
    auto build_ln = [&] { return ops::mean(ops::layernorm_rows(x, g, beta)); };
    check_grad_matches(g, build_ln, 1e-4);

    Var img = make_param(random_tensor(rng, {3, 12, 11}));
    Var cw = make_param(random_tensor(rng, {4, 3, 3, 3}, -0.3, 0.3));
    Var cb = make_param(random_tensor(rng, {4}, -0.1, 0.1));
    auto build_conv = [&] {
        Var y = ops::conv2d(img, cw, cb, 2, 1);
        Var z = ops::bilinear_resize(y, 9, 8);
        return ops::mean(ops::mul(z, z));
    };
    check_grad_matches(img, build_conv, 1e-5);
    check_grad_matches(cw, build_conv, 1e-5);

    auto build_morph = [&] { return ops::mean(ops::max_filter3(ops::min_filter3(img))); };
    check_grad_matches(img, build_morph, 1e-4);

    Tensor pts({9, 2});
    Rng prng(3);
    for (auto& v : pts.v) v = prng.uniform(0.05, 0.95);
    auto build_gs = [&] {
        Var s = ops::grid_sample(img, pts);
        return ops::mean(ops::mul(s, s));
    };
    check_grad_matches(img, build_gs, 1e-5);
}

TEST_CASE("attention op matches dense reference and grads check out") {
    Rng rng(5);
    Var q = make_param(random_tensor(rng, {4, 16}));
    Var k = make_param(random_tensor(rng, {9, 16}));
    Var v = make_param(random_tensor(rng, {9, 16}));
    Tensor probs;
    Var out = ops::attention(q, k, v, 4, &probs);

    Tensor ref({4, 16});
    reference::dense_attention(q->value.data(), k->value.data(), v->value.data(), ref.data(), 4, 9, 16, 4);
    for (int64_t i = 0; i < ref.numel(); ++i) CHECK(out->value[i] == doctest::Approx(ref[i]).epsilon(1e-10));

    for (int r = 0; r < probs.dim(0); ++r) {
        double s = 0.0;
        for (int c = 0; c < probs.dim(1); ++c) s += probs.at(r, c);
        CHECK(std::abs(s - 1.0) < 1e-12);
    }

    auto build = [&] { return ops::mean(ops::mul(ops::attention(q, k, v, 4), ops::attention(q, k, v, 4))); };
    check_grad_matches(q, build, 1e-5);
    check_grad_matches(k, build, 1e-5);
    check_grad_matches(v, build, 1e-5);
}

TEST_CASE("deformable sample: constant field with zero offsets returns the constant") {
    Rng rng(17);
    const int D = 8, heads = 2, points = 1;
    std::vector<Var> values;
    values.push_back(constant(Tensor::full({D, 6, 7}, 3.25)));
    Var offsets = make_param(Tensor::zeros({5, heads * 1 * points * 2}));
    Tensor wts({5, heads * 1 * points});
    for (auto& v : wts.v) v = 1.0;  // single point per head: softmax would give 1
    Var weights = constant(wts);
    Tensor ref({5, 2});
    for (int i = 0; i < 5; ++i) {
        ref.at(i, 0) = rng.uniform(0.1, 0.9);
        ref.at(i, 1) = rng.uniform(0.1, 0.9);
    }
    Var out = ops::deformable_sample(values, offsets, weights, ref, heads, points);
    for (int64_t i = 0; i < out->value.numel(); ++i) CHECK(out->value[i] == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("deformable sample gradients vs finite differences") {
    Rng rng(23);
    const int heads = 2, points = 2, L = 2, Q = 3, D = 8;
    Var v0 = make_param(random_tensor(rng, {D, 6, 5}));
    Var v1 = make_param(random_tensor(rng, {D, 3, 3}));
    Var offsets = make_param(random_tensor(rng, {Q, heads * L * points * 2}, -0.8, 0.8));
    Var wraw = make_param(random_tensor(rng, {Q, heads * L * points}));
    Tensor ref({Q, 2});
    for (auto& r : ref.v) r = rng.uniform(0.2, 0.8);
    auto build = [&] {
        Var w2 = ops::reshape(ops::softmax_rows(ops::reshape(wraw, {Q * heads, L * points})), {Q, heads * L * points});
        Var out = ops::deformable_sample({v0, v1}, offsets, w2, ref, heads, points);
        return ops::mean(ops::mul(out, out));
    };
    check_grad_matches(v0, build, 1e-4);
    check_grad_matches(offsets, build, 1e-4);
    check_grad_matches(wraw, build, 1e-4);
}

TEST_CASE("bce and dice ops") {
    Var z = constant(Tensor::zeros({8}));
    Tensor t = Tensor::zeros({8});
    Var l = ops::bce_with_logits_mean(z, t);
    CHECK(l->value[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Rng rng(31);
    Var logits = make_param(random_tensor(rng, {16}, -2.0, 2.0));
    Tensor tt({16});
    for (auto& v : tt.v) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    auto build_bce = [&] { return ops::bce_with_logits_mean(logits, tt); };
    check_grad_matches(logits, build_bce, 1e-5);
    auto build_dice = [&] { return ops::dice_from_logits(logits, tt); };
    check_grad_matches(logits, build_dice, 1e-5);
}

TEST_CASE("adamw step reduces a quadratic") {
    ParamStore ps;
    Rng rng(9);
    Var w = ps.create("w", random_tensor(rng, {10}));
    AdamW opt({.lr = 0.05});
    double first = 0.0;
    for (int it = 0; it < 200; ++it) {
        opt.zero_grad(ps);
        Var loss = ops::mean(ops::mul(w, w));
        if (it == 0) first = loss->value[0];
        backward(loss);
        opt.step(ps);
    }
    Var final_loss = ops::mean(ops::mul(w, w));
    CHECK(final_loss->value[0] < first * 1e-3);
}

TEST_CASE("sine position encodings are deterministic and bounded") {
    Tensor g = sine_embed_grid(4, 5, 32);
    CHECK(g.dim(0) == 20);
    CHECK(g.dim(1) == 32);
    for (double v : g.v) CHECK(std::abs(v) <= 1.0 + 1e-12);
    Tensor pts({1, 2});
    pts.at(0, 0) = 0.5;
    pts.at(0, 1) = 0.25;
    Tensor a = sine_embed_points(pts, 64);
    Tensor b = sine_embed_points(pts, 64);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
}
