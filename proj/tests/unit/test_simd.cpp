#include <cmath>
#include <vector>

#include "atsalign/rng.hpp"
#include "atsalign/simd/kernels.hpp"
#include "doctest.h"

using namespace atsalign;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() * 2 - 1;
  return v;
}

// Relative difference scaled by the magnitude of the summed terms, which is
// what reassociation error is proportional to.
double rel(double a, double b, double scale) { return std::abs(a - b) / std::max(scale, 1e-300); }

}  // namespace

TEST_CASE("dispatch picks a kernel set and honours the override") {
  const auto& k = simd::active();
  CHECK_FALSE(k.name.empty());
  CHECK(simd::scalar_kernels().name == "scalar");
  if (simd::avx2_kernels() == nullptr) MESSAGE("AVX2 kernels not built; equivalence checks skipped");
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  const auto* v = simd::avx2_kernels();
  if (v == nullptr) return;
  const auto& s = simd::scalar_kernels();
  Rng rng(99);
  // odd sizes exercise the remainder loops
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 33u, 96u, 301u}) {
    const auto a = random_vec(rng, n), b = random_vec(rng, n);
    double scale = 0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
    CHECK(rel(s.dot(a.data(), b.data(), n), v->dot(a.data(), b.data(), n), scale) < 1e-12);

    auto y1 = b, y2 = b;
    s.axpy(0.37, a.data(), y1.data(), n);
    v->axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));
  }
  for (std::size_t rows : {1u, 5u, 32u}) {
    for (std::size_t cols : {1u, 3u, 8u, 13u, 96u}) {
      const auto A = random_vec(rng, rows * cols), x = random_vec(rng, cols), xr = random_vec(rng, rows),
                 bias = random_vec(rng, rows);
      std::vector<double> y1(rows), y2(rows);
      s.gemv(A.data(), rows, cols, x.data(), bias.data(), y1.data());
      v->gemv(A.data(), rows, cols, x.data(), bias.data(), y2.data());
      for (std::size_t r = 0; r < rows; ++r) CHECK(rel(y1[r], y2[r], double(cols)) < 1e-12);
      s.gemv(A.data(), rows, cols, x.data(), nullptr, y1.data());
      v->gemv(A.data(), rows, cols, x.data(), nullptr, y2.data());
      for (std::size_t r = 0; r < rows; ++r) CHECK(rel(y1[r], y2[r], double(cols)) < 1e-12);

      std::vector<double> t1(cols, 0.5), t2(cols, 0.5);
      s.gemv_t_acc(A.data(), rows, cols, xr.data(), t1.data());
      v->gemv_t_acc(A.data(), rows, cols, xr.data(), t2.data());
      for (std::size_t c = 0; c < cols; ++c) CHECK(rel(t1[c], t2[c], double(rows)) < 1e-12);

      auto G1 = A, G2 = A;
      s.ger(G1.data(), rows, cols, -0.25, xr.data(), x.data());
      v->ger(G2.data(), rows, cols, -0.25, xr.data(), x.data());
      for (std::size_t i = 0; i < rows * cols; ++i) CHECK(G1[i] == doctest::Approx(G2[i]).epsilon(1e-14));
    }
  }
}
