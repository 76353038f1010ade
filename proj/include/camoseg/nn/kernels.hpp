#pragma once

#include <cstdint>

namespace camoseg::nn::kernels {

// Execution mode for the data-parallel kernels. Every kernel computes each
// output element with the same scalar code path in both modes; Parallel only
// splits the output range across OpenMP threads, so results are bit-identical
// to Serial. Scatter-style backward accumulations stay serial regardless of
// mode to keep the floating-point reduction order fixed.
enum class Mode { Serial, Parallel };

Mode mode();
void set_mode(Mode m);
bool run_parallel(int64_t work);

// C[M,N] = A[M,K] * B[K,N]
void matmul(const double* A, const double* B, double* C, int M, int K, int N);
// C[K,N] = A^T[K,M] * B[M,N], A stored [M,K]
void matmul_at(const double* A, const double* B, double* C, int M, int K, int N);
// C[M,N] = A[M,K] * B^T[K,N], B stored [N,K]
void matmul_bt(const double* A, const double* B, double* C, int M, int K, int N);

// Zero-padded strided convolution, x[C,H,W], w[O,C,kh,kw], y[O,OH,OW].
void conv2d_forward(const double* x, const double* w, const double* b, double* y,
                    int C, int H, int W, int O, int kh, int kw, int stride, int pad,
                    int OH, int OW);
void conv2d_backward_input(const double* gy, const double* w, double* gx,
                           int C, int H, int W, int O, int kh, int kw, int stride, int pad,
                           int OH, int OW);
void conv2d_backward_weight(const double* gy, const double* x, double* gw, double* gb,
                            int C, int H, int W, int O, int kh, int kw, int stride, int pad,
                            int OH, int OW);

// 3x3 min/max filter with replicate padding. arg records the flat input index
// of the selected extremum per output (first hit in row-major scan order).
void extremum_filter3(const double* x, double* y, int32_t* arg, int C, int H, int W, bool take_max);
void extremum_filter3_backward(const double* gy, const int32_t* arg, double* gx, int C, int H, int W);

// Bilinear resize, align-corners=false with border clamping. Backward is a
// serial scatter.
void bilinear_resize_forward(const double* x, double* y, int C, int H, int W, int OH, int OW);
void bilinear_resize_backward(const double* gy, double* gx, int C, int H, int W, int OH, int OW);

// Samples x[C,H,W] at P normalized points (x,y) in [0,1]^2 into out[P,C].
// Out-of-range locations clamp to the border.
void grid_sample_forward(const double* x, const double* pts, double* out, int C, int H, int W, int P);
void grid_sample_backward_values(const double* g, const double* pts, double* gx,
                                 int C, int H, int W, int P);
void grid_sample_backward_points(const double* g, const double* x, const double* pts, double* gpts,
                                 int C, int H, int W, int P);

// Row-wise softmax over [M,N].
void softmax_rows(const double* x, double* y, int M, int N);
void softmax_rows_backward(const double* y, const double* gy, double* gx, int M, int N);

// Row-wise layer norm over [M,N] with eps inside the sqrt.
void layernorm_rows(const double* x, const double* gamma, const double* beta, double* y,
                    double* mean, double* rstd, int M, int N, double eps);
void layernorm_rows_backward(const double* x, const double* gamma, const double* mean,
                             const double* rstd, const double* gy, double* gx, double* ggamma,
                             double* gbeta, int M, int N);

// Elementwise helpers.
void relu_forward(const double* x, double* y, int64_t n);
void relu_backward(const double* x, const double* gy, double* gx, int64_t n);
void sigmoid_forward(const double* x, double* y, int64_t n);
void add(const double* a, const double* b, double* y, int64_t n);
void axpy(double alpha, const double* x, double* y, int64_t n);  // y += alpha*x
void scale(const double* x, double alpha, double* y, int64_t n);
void hadamard(const double* a, const double* b, double* y, int64_t n);

}  // namespace camoseg::nn::kernels
