#pragma once

#include "dsad/matrix.hpp"

// Data-parallel kernels behind every forward/backward pass. Each kernel
// exists twice: the OpenMP version used everywhere, and a plain serial
// reference under kernels::serial used by tests and the benchmark tool.
//
// Parallel loops partition output elements only; every output value is
// reduced in a fixed serial order inside one thread, so results are
// bit-identical to the serial reference for any thread count.

namespace dsad::kernels {

// c = a * b
void matmul(const Matrix& a, const Matrix& b, Matrix& c);
// c = a * b^T
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
// c += a^T * b  (accumulating; used for weight gradients)
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

// y[t] = sum_{tap,i} x[t + (tap - k/2)*dilation][i] * w[tap*Din + i][:] + bias
// Zero padding outside [0, T); w is (k*Din) x Dout with tap-major rows.
void conv1d(const Matrix& x, const Matrix& w, const Matrix& bias, int ksize, int dilation,
            Matrix& y);
// dx from dy (same padding rules); dx must be pre-sized T x Din.
void conv1d_backward_data(const Matrix& dy, const Matrix& w, int ksize, int dilation, Matrix& dx);
// dw += accumulation, dbias += column sums of dy.
void conv1d_backward_weights(const Matrix& x, const Matrix& dy, int ksize, int dilation,
                             Matrix& dw, Matrix& dbias);

namespace serial {
void matmul(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
void conv1d(const Matrix& x, const Matrix& w, const Matrix& bias, int ksize, int dilation,
            Matrix& y);
void conv1d_backward_data(const Matrix& dy, const Matrix& w, int ksize, int dilation, Matrix& dx);
void conv1d_backward_weights(const Matrix& x, const Matrix& dy, int ksize, int dilation,
                             Matrix& dw, Matrix& dbias);
}  // namespace serial

}  // namespace dsad::kernels
