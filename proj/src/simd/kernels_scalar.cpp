#include "atsalign/simd/kernels.hpp"

namespace atsalign::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* A, std::size_t rows, std::size_t cols, const double* x, const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(A + r * cols, x, cols) + (bias ? bias[r] : 0.0);
}

void gemv_t_acc(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r)
    if (x[r] != 0.0) axpy(x[r], A + r * cols, y, cols);
}

void ger(double* A, std::size_t rows, std::size_t cols, double alpha, const double* x, const double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = alpha * x[r];
    if (s != 0.0) axpy(s, y, A + r * cols, cols);
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{dot, axpy, gemv, gemv_t_acc, ger, "scalar"};
  return k;
}

}  // namespace atsalign::simd
