#pragma once

// Element-wise kernels used by the batched tape evaluator. Each kernel walks
// `n` contiguous doubles. The scalar table is the reference; the AVX2 table is
// selected at runtime when the CPU supports it and must agree with the scalar
// table bit for bit on arithmetic ops and to a few ulps on exp/log/sigmoid.

#include <cstddef>

namespace dice::simd {

enum class Isa { Scalar, Avx2 };

struct Kernels {
  Isa isa;
  const char* name;
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // Returns false when some b[i] == 0; out is unspecified in that case.
  bool (*div)(const double* a, const double* b, double* out, std::size_t n);
  void (*neg)(const double* a, double* out, std::size_t n);
  void (*exp)(const double* a, double* out, std::size_t n);
  // Returns false when some a[i] is not > 0.
  bool (*log)(const double* a, double* out, std::size_t n);
  void (*sigmoid)(const double* a, double* out, std::size_t n);
  // Returns false when the result is NaN for a non-NaN input.
  bool (*pow)(const double* a, double k, double* out, std::size_t n);
  void (*clamp)(const double* a, double lo, double hi, double* out, std::size_t n);
};

const Kernels& scalar_kernels();
// nullptr when AVX2/FMA are not available on this CPU or were not compiled in.
const Kernels* avx2_kernels();
// Best available table; DICE_SIMD=scalar forces the reference kernels.
const Kernels& active_kernels();

}  // namespace dice::simd
