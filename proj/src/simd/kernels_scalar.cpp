#include "fairvec/simd/kernels.hpp"

namespace fairvec::simd::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void gemv(const double* matrix, std::size_t rows, std::size_t n,
          const double* x, double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot(matrix + r * n, x, n);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable kTable{Isa::kScalar, dot, axpy, scale, gemv};
  return kTable;
}

}  // namespace fairvec::simd::scalar
