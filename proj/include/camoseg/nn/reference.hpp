#pragma once

#include <cstdint>

namespace camoseg::nn::reference {

// Naive single-threaded reference kernels. These are written independently of
// the kernels in camoseg::nn::kernels and exist as the comparison baseline for
// tests and the benchmark target. Do not optimize them.

void matmul(const double* A, const double* B, double* C, int M, int K, int N);

void conv2d(const double* x, const double* w, const double* b, double* y,
            int C, int H, int W, int O, int kh, int kw, int stride, int pad,
            int OH, int OW);

void extremum_filter3(const double* x, double* y, int C, int H, int W, bool take_max);

void bilinear_resize(const double* x, double* y, int C, int H, int W, int OH, int OW);

void grid_sample(const double* x, const double* pts, double* out, int C, int H, int W, int P);

void softmax_rows(const double* x, double* y, int M, int N);

// Dense multi-head attention computed with explicit loops over every
// query/key pair; used as the oracle against the attention ops.
void dense_attention(const double* q, const double* k, const double* v, double* out,
                     int Nq, int Nk, int D, int heads);

}  // namespace camoseg::nn::reference
