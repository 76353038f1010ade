#include "camoseg/nn/reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace camoseg::nn::reference {

void matmul(const double* A, const double* B, double* C, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        for (int j = 0; j < N; ++j) {
            double acc = 0.0;
            for (int k = 0; k < K; ++k) acc += A[static_cast<int64_t>(i) * K + k] * B[static_cast<int64_t>(k) * N + j];
            C[static_cast<int64_t>(i) * N + j] = acc;
        }
    }
}

void conv2d(const double* x, const double* w, const double* b, double* y,
            int C, int H, int W, int O, int kh, int kw, int stride, int pad,
            int OH, int OW) {
    for (int o = 0; o < O; ++o)
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                double acc = b ? b[o] : 0.0;
                for (int c = 0; c < C; ++c)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            const int iy = oy * stride - pad + ky;
                            const int ix = ox * stride - pad + kx;
                            if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                            acc += x[(static_cast<int64_t>(c) * H + iy) * W + ix] *
                                   w[((static_cast<int64_t>(o) * C + c) * kh + ky) * kw + kx];
                        }
                y[(static_cast<int64_t>(o) * OH + oy) * OW + ox] = acc;
            }
}

void extremum_filter3(const double* x, double* y, int C, int H, int W, bool take_max) {
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                bool first = true;
                double best = 0.0;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const int ii = std::clamp(i + di, 0, H - 1);
                        const int jj = std::clamp(j + dj, 0, W - 1);
                        const double v = x[(static_cast<int64_t>(c) * H + ii) * W + jj];
                        if (first || (take_max ? v > best : v < best)) {
                            best = v;
                            first = false;
                        }
                    }
                y[(static_cast<int64_t>(c) * H + i) * W + j] = best;
            }
}

void bilinear_resize(const double* x, double* y, int C, int H, int W, int OH, int OW) {
    for (int c = 0; c < C; ++c)
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                const double sy = std::clamp((oy + 0.5) * H / OH - 0.5, 0.0, static_cast<double>(H - 1));
                const double sx = std::clamp((ox + 0.5) * W / OW - 0.5, 0.0, static_cast<double>(W - 1));
                const int y0 = static_cast<int>(std::floor(sy));
                const int x0 = static_cast<int>(std::floor(sx));
                const int y1 = std::min(y0 + 1, H - 1);
                const int x1 = std::min(x0 + 1, W - 1);
                const double fy = sy - y0, fx = sx - x0;
                auto v = [&](int yy, int xx) { return x[(static_cast<int64_t>(c) * H + yy) * W + xx]; };
                y[(static_cast<int64_t>(c) * OH + oy) * OW + ox] =
                    (1 - fy) * ((1 - fx) * v(y0, x0) + fx * v(y0, x1)) +
                    fy * ((1 - fx) * v(y1, x0) + fx * v(y1, x1));
            }
}

void grid_sample(const double* x, const double* pts, double* out, int C, int H, int W, int P) {
    for (int p = 0; p < P; ++p) {
        const double px = std::clamp(pts[2 * p] * W - 0.5, 0.0, static_cast<double>(W - 1));
        const double py = std::clamp(pts[2 * p + 1] * H - 0.5, 0.0, static_cast<double>(H - 1));
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const int x1 = std::min(x0 + 1, W - 1);
        const int y1 = std::min(y0 + 1, H - 1);
        const double fx = px - x0, fy = py - y0;
        for (int c = 0; c < C; ++c) {
            auto v = [&](int yy, int xx) { return x[(static_cast<int64_t>(c) * H + yy) * W + xx]; };
            out[static_cast<int64_t>(p) * C + c] =
                (1 - fy) * ((1 - fx) * v(y0, x0) + fx * v(y0, x1)) +
                fy * ((1 - fx) * v(y1, x0) + fx * v(y1, x1));
        }
    }
}

void softmax_rows(const double* x, double* y, int M, int N) {
    for (int i = 0; i < M; ++i) {
        double mx = x[static_cast<int64_t>(i) * N];
        for (int j = 1; j < N; ++j) mx = std::max(mx, x[static_cast<int64_t>(i) * N + j]);
        double s = 0.0;
        for (int j = 0; j < N; ++j) s += std::exp(x[static_cast<int64_t>(i) * N + j] - mx);
        for (int j = 0; j < N; ++j) y[static_cast<int64_t>(i) * N + j] = std::exp(x[static_cast<int64_t>(i) * N + j] - mx) / s;
    }
}

void dense_attention(const double* q, const double* k, const double* v, double* out,
                     int Nq, int Nk, int D, int heads) {
    const int hd = D / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(hd));
    std::vector<double> scores(static_cast<size_t>(Nk));
    for (int h = 0; h < heads; ++h) {
        const int off = h * hd;
        for (int i = 0; i < Nq; ++i) {
            for (int j = 0; j < Nk; ++j) {
                double dot = 0.0;
                for (int d = 0; d < hd; ++d)
                    dot += q[static_cast<int64_t>(i) * D + off + d] * k[static_cast<int64_t>(j) * D + off + d];
                scores[static_cast<size_t>(j)] = dot * inv;
            }
            double mx = scores[0];
            for (int j = 1; j < Nk; ++j) mx = std::max(mx, scores[static_cast<size_t>(j)]);
            double s = 0.0;
            for (int j = 0; j < Nk; ++j) {
                scores[static_cast<size_t>(j)] = std::exp(scores[static_cast<size_t>(j)] - mx);
                s += scores[static_cast<size_t>(j)];
            }
            for (int d = 0; d < hd; ++d) {
                double acc = 0.0;
                for (int j = 0; j < Nk; ++j)
                    acc += scores[static_cast<size_t>(j)] / s * v[static_cast<int64_t>(j) * D + off + d];
                out[static_cast<int64_t>(i) * D + off + d] = acc;
            }
        }
    }
}

}  // namespace camoseg::nn::reference
