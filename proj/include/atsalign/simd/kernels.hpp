#pragma once

#include <cstddef>
#include <string_view>

namespace atsalign::simd {

// Dense double-precision kernels used by the toy language model. Matrices are
// row-major with an explicit leading dimension equal to `cols`.
struct Kernels {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x + bias (bias may be null)
  void (*gemv)(const double* A, std::size_t rows, std::size_t cols, const double* x, const double* bias, double* y);
  // y += A^T x
  void (*gemv_t_acc)(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y);
  // A += alpha * x y^T
  void (*ger)(double* A, std::size_t rows, std::size_t cols, double alpha, const double* x, const double* y);
  std::string_view name;
};

const Kernels& scalar_kernels();

// Null when the binary was built without AVX2 support.
const Kernels* avx2_kernels();

// Best kernel set for this CPU. Setting ATSALIGN_SIMD=scalar in the
// environment forces the reference path. Resolved once per process.
const Kernels& active();

}  // namespace atsalign::simd
