#include "dsad/kernels.hpp"

namespace dsad::kernels {

namespace {

inline void check_matmul(const Matrix& a, const Matrix& b, const Matrix& c, int m, int n, int k,
                         const char* what) {
  if (a.cols() != k || b.rows() == 0 || c.rows() != m || c.cols() != n) {
    throw dimension_error(std::string(what) + ": nonconformable shapes");
  }
}

inline void matmul_row(const double* arow, const Matrix& b, double* crow, int n, int k) {
  for (int j = 0; j < n; ++j) crow[j] = 0.0;
  for (int kk = 0; kk < k; ++kk) {
    const double av = arow[kk];
    const double* brow = b.row(kk);
    for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline int conv_offset(int tap, int ksize, int dilation) {
  return (tap - (ksize - 1) / 2) * dilation;
}

inline void conv1d_row(const Matrix& x, const Matrix& w, const Matrix& bias, int ksize,
                       int dilation, int t, double* yrow) {
  const int T = x.rows();
  const int din = x.cols();
  const int dout = w.cols();
  for (int j = 0; j < dout; ++j) yrow[j] = bias.data()[j];
  for (int tap = 0; tap < ksize; ++tap) {
    const int s = t + conv_offset(tap, ksize, dilation);
    if (s < 0 || s >= T) continue;
    const double* xrow = x.row(s);
    for (int i = 0; i < din; ++i) {
      const double xv = xrow[i];
      const double* wrow = w.row(tap * din + i);
      for (int j = 0; j < dout; ++j) yrow[j] += xv * wrow[j];
    }
  }
}

// Transposed weight view (tap-major, [tap*Dout + j][i]) so the inner loop
// runs contiguously over input channels.
inline Matrix transpose_taps(const Matrix& w, int ksize) {
  const int din = static_cast<int>(w.rows()) / ksize;
  const int dout = w.cols();
  Matrix wt(ksize * dout, din);
  for (int tap = 0; tap < ksize; ++tap)
    for (int i = 0; i < din; ++i)
      for (int j = 0; j < dout; ++j) wt(tap * dout + j, i) = w(tap * din + i, j);
  return wt;
}

inline void conv1d_bwd_data_row(const Matrix& dy, const Matrix& wt, int ksize, int dilation,
                                int din, int s, double* dxrow) {
  const int T = dy.rows();
  const int dout = dy.cols();
  for (int i = 0; i < din; ++i) dxrow[i] = 0.0;
  for (int tap = 0; tap < ksize; ++tap) {
    const int t = s - conv_offset(tap, ksize, dilation);
    if (t < 0 || t >= T) continue;
    const double* dyrow = dy.row(t);
    for (int j = 0; j < dout; ++j) {
      const double dv = dyrow[j];
      const double* wrow = wt.row(tap * dout + j);
      for (int i = 0; i < din; ++i) dxrow[i] += dv * wrow[i];
    }
  }
}

inline void conv1d_bwd_weight_row(const Matrix& x, const Matrix& dy, int ksize, int dilation,
                                  int wrow_index, double* dwrow) {
  const int T = x.rows();
  const int din = x.cols();
  const int dout = dy.cols();
  const int tap = wrow_index / din;
  const int i = wrow_index % din;
  const int off = conv_offset(tap, ksize, dilation);
  for (int t = 0; t < T; ++t) {
    const int s = t + off;
    if (s < 0 || s >= T) continue;
    const double xv = x(s, i);
    const double* dyrow = dy.row(t);
    for (int j = 0; j < dout; ++j) dwrow[j] += xv * dyrow[j];
  }
}

}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  check_matmul(a, b, c, m, n, k, "matmul");
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_row(a.row(i), b, c.row(i), n, k);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  const int m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k || c.rows() != m || c.cols() != n) {
    throw dimension_error("matmul_nt: nonconformable shapes");
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < n; ++j) crow[j] = dot(arow, b.row(j), k);
  }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const int t = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != t || c.rows() != m || c.cols() != n) {
    throw dimension_error("matmul_tn_acc: nonconformable shapes");
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* crow = c.row(i);
    for (int tt = 0; tt < t; ++tt) {
      const double av = a(tt, i);
      const double* brow = b.row(tt);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void conv1d(const Matrix& x, const Matrix& w, const Matrix& bias, int ksize, int dilation,
            Matrix& y) {
  if (dilation < 1) throw invalid_parameter("conv1d: dilation must be >= 1");
  if (ksize < 1 || ksize % 2 == 0) throw invalid_parameter("conv1d: kernel size must be odd");
  if (w.rows() != ksize * x.cols() || y.rows() != x.rows() || y.cols() != w.cols() ||
      static_cast<int>(bias.size()) != w.cols()) {
    throw dimension_error("conv1d: nonconformable shapes");
  }
  const int T = x.rows();
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t) conv1d_row(x, w, bias, ksize, dilation, t, y.row(t));
}

void conv1d_backward_data(const Matrix& dy, const Matrix& w, int ksize, int dilation, Matrix& dx) {
  const int T = dy.rows();
  const int din = dx.cols();
  const Matrix wt = transpose_taps(w, ksize);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < T; ++s) conv1d_bwd_data_row(dy, wt, ksize, dilation, din, s, dx.row(s));
}

void conv1d_backward_weights(const Matrix& x, const Matrix& dy, int ksize, int dilation,
                             Matrix& dw, Matrix& dbias) {
  const int nrows = dw.rows();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < nrows; ++r) conv1d_bwd_weight_row(x, dy, ksize, dilation, r, dw.row(r));
  const int T = dy.rows(), dout = dy.cols();
  for (int t = 0; t < T; ++t) {
    const double* dyrow = dy.row(t);
    for (int j = 0; j < dout; ++j) dbias.data()[j] += dyrow[j];
  }
}

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  check_matmul(a, b, c, m, n, k, "matmul");
  for (int i = 0; i < m; ++i) matmul_row(a.row(i), b, c.row(i), n, k);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  const int m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k || c.rows() != m || c.cols() != n) {
    throw dimension_error("matmul_nt: nonconformable shapes");
  }
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < n; ++j) crow[j] = dot(arow, b.row(j), k);
  }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const int t = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != t || c.rows() != m || c.cols() != n) {
    throw dimension_error("matmul_tn_acc: nonconformable shapes");
  }
  for (int i = 0; i < m; ++i) {
    double* crow = c.row(i);
    for (int tt = 0; tt < t; ++tt) {
      const double av = a(tt, i);
      const double* brow = b.row(tt);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void conv1d(const Matrix& x, const Matrix& w, const Matrix& bias, int ksize, int dilation,
            Matrix& y) {
  if (dilation < 1) throw invalid_parameter("conv1d: dilation must be >= 1");
  if (ksize < 1 || ksize % 2 == 0) throw invalid_parameter("conv1d: kernel size must be odd");
  const int T = x.rows();
  for (int t = 0; t < T; ++t) conv1d_row(x, w, bias, ksize, dilation, t, y.row(t));
}

void conv1d_backward_data(const Matrix& dy, const Matrix& w, int ksize, int dilation, Matrix& dx) {
  const int T = dy.rows();
  const int din = dx.cols();
  const Matrix wt = transpose_taps(w, ksize);
  for (int s = 0; s < T; ++s) conv1d_bwd_data_row(dy, wt, ksize, dilation, din, s, dx.row(s));
}

void conv1d_backward_weights(const Matrix& x, const Matrix& dy, int ksize, int dilation,
                             Matrix& dw, Matrix& dbias) {
  const int nrows = dw.rows();
  for (int r = 0; r < nrows; ++r) conv1d_bwd_weight_row(x, dy, ksize, dilation, r, dw.row(r));
  const int T = dy.rows(), dout = dy.cols();
  for (int t = 0; t < T; ++t) {
    const double* dyrow = dy.row(t);
    for (int j = 0; j < dout; ++j) dbias.data()[j] += dyrow[j];
  }
}

}  // namespace serial

}  // namespace dsad::kernels
