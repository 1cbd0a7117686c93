// Times the OpenMP kernels against their serial references on the shapes
// the streams actually use (T=256 sequences, D=64 channels) and checks
// that both produce identical bits.

#include <chrono>
#include <cstdio>
#include <functional>

#include "dsad/kernels.hpp"
#include "dsad/rng.hpp"

namespace {

using dsad::Matrix;
using clock_type = std::chrono::steady_clock;

Matrix random_matrix(int r, int c, dsad::Rng& rng) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = clock_type::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = clock_type::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double flops, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-28s serial %8.3f ms (%6.2f GF/s)   omp %8.3f ms (%6.2f GF/s)   x%.2f   %s\n",
              name, serial_ms, flops / serial_ms * 1e-6, parallel_ms,
              flops / parallel_ms * 1e-6, serial_ms / parallel_ms,
              equal ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  dsad::Rng rng(7);
  const int T = 256, D = 64, reps = 50;

  {
    Matrix a = random_matrix(T, D, rng), b = random_matrix(D, D, rng);
    Matrix c1(T, D), c2(T, D);
    const double flops = 2.0 * T * D * D;
    double s = time_ms([&] { dsad::kernels::serial::matmul(a, b, c1); }, reps);
    double p = time_ms([&] { dsad::kernels::matmul(a, b, c2); }, reps);
    report("matmul 256x64 * 64x64", flops, s, p, c1 == c2);
  }
  {
    Matrix a = random_matrix(T, D, rng), b = random_matrix(T, D, rng);
    Matrix c1(T, T), c2(T, T);
    const double flops = 2.0 * T * T * D;
    double s = time_ms([&] { dsad::kernels::serial::matmul_nt(a, b, c1); }, reps);
    double p = time_ms([&] { dsad::kernels::matmul_nt(a, b, c2); }, reps);
    report("matmul_nt 256x64 * 256x64^T", flops, s, p, c1 == c2);
  }
  {
    Matrix a = random_matrix(T, D, rng), b = random_matrix(T, D, rng);
    Matrix c1(D, D), c2(D, D);
    const double flops = 2.0 * T * D * D;
    double s = time_ms([&] { c1.zero(); dsad::kernels::serial::matmul_tn_acc(a, b, c1); }, reps);
    double p = time_ms([&] { c2.zero(); dsad::kernels::matmul_tn_acc(a, b, c2); }, reps);
    report("matmul_tn 256x64^T * 256x64", flops, s, p, c1 == c2);
  }
  {
    const int k = 3;
    Matrix x = random_matrix(T, D, rng), w = random_matrix(k * D, D, rng);
    Matrix bias = random_matrix(1, D, rng);
    Matrix y1(T, D), y2(T, D);
    const double flops = 2.0 * T * k * D * D;
    double s = time_ms([&] { dsad::kernels::serial::conv1d(x, w, bias, k, 4, y1); }, reps);
    double p = time_ms([&] { dsad::kernels::conv1d(x, w, bias, k, 4, y2); }, reps);
    report("conv1d k=3 d=4 256x64", flops, s, p, y1 == y2);

    Matrix dx1(T, D), dx2(T, D);
    s = time_ms([&] { dsad::kernels::serial::conv1d_backward_data(y1, w, k, 4, dx1); }, reps);
    p = time_ms([&] { dsad::kernels::conv1d_backward_data(y2, w, k, 4, dx2); }, reps);
    report("conv1d bwd-data", flops, s, p, dx1 == dx2);

    Matrix dw1(k * D, D), dw2(k * D, D), db1(1, D), db2(1, D);
    s = time_ms([&] { dw1.zero(); db1.zero();
                      dsad::kernels::serial::conv1d_backward_weights(x, y1, k, 4, dw1, db1); }, reps);
    p = time_ms([&] { dw2.zero(); db2.zero();
                      dsad::kernels::conv1d_backward_weights(x, y2, k, 4, dw2, db2); }, reps);
    report("conv1d bwd-weights", flops, s, p, dw1 == dw2 && db1 == db2);
  }
  return 0;
}
