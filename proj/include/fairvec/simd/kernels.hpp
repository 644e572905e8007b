#pragma once

// Dense double-precision kernels behind every metric and transform.
//
// Each kernel has a scalar reference implementation plus vectorized
// variants (AVX2+FMA on x86-64, NEON on AArch64). The variant is picked
// once at startup from CPU features; FAIRVEC_SIMD=scalar|avx2|neon
// overrides the choice. Vectorized variants reassociate sums, so results
// agree with the scalar path to rounding, not bit for bit.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace fairvec::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // out[i] = <row i of the rows x n row-major matrix, x>
  void (*gemv)(const double* matrix, std::size_t rows, std::size_t n,
               const double* x, double* out);
};

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
// Null when the build has no AVX2 variant.
const KernelTable* table();
}
namespace neon {
const KernelTable* table();
}

// ISAs that are both compiled in and supported by this CPU.
std::vector<Isa> available_isas();

// The table used by the span wrappers below.
const KernelTable& active();

// Force a particular ISA; returns false (and changes nothing) if it is
// unavailable. Not thread-safe with concurrent kernel calls.
bool select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double squared_norm(std::span<const double> a) {
  return active().dot(a.data(), a.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

inline void gemv(std::span<const double> matrix, std::size_t rows,
                 std::span<const double> x, std::span<double> out) {
  active().gemv(matrix.data(), rows, x.size(), x.data(), out.data());
}

}  // namespace fairvec::simd
