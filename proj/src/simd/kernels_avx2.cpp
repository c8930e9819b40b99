// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPU check (see avx2_kernels()).

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <cstring>

#include "dice/kernels.hpp"

namespace dice::simd {

namespace {

constexpr std::size_t kWidth = 4;

// Runs `body` over full vectors, then over a zero-padded copy of the tail so
// every element goes through the same vector code path.
template <class Body>
inline void for_each_vec(const double* a, double* out, std::size_t n, Body body) {
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) _mm256_storeu_pd(out + i, body(_mm256_loadu_pd(a + i)));
  if (i < n) {
    alignas(32) double ta[kWidth] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double to[kWidth];
    std::memcpy(ta, a + i, (n - i) * sizeof(double));
    _mm256_store_pd(to, body(_mm256_load_pd(ta)));
    std::memcpy(out + i, to, (n - i) * sizeof(double));
  }
}

template <class Body>
inline void for_each_vec2(const double* a, const double* b, double* out, std::size_t n,
                          double pad_b, Body body) {
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth)
    _mm256_storeu_pd(out + i, body(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  if (i < n) {
    alignas(32) double ta[kWidth] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double tb[kWidth] = {pad_b, pad_b, pad_b, pad_b};
    alignas(32) double to[kWidth];
    std::memcpy(ta, a + i, (n - i) * sizeof(double));
    std::memcpy(tb, b + i, (n - i) * sizeof(double));
    _mm256_store_pd(to, body(_mm256_load_pd(ta), _mm256_load_pd(tb)));
    std::memcpy(out + i, to, (n - i) * sizeof(double));
  }
}

// 2^m for integral m in [-1022, 1023], m held in doubles.
inline __m256d exp2_int(__m256d m) {
  const __m128i m32 = _mm256_cvtpd_epi32(m);
  __m256i m64 = _mm256_cvtepi32_epi64(m32);
  m64 = _mm256_add_epi64(m64, _mm256_set1_epi64x(1023));
  return _mm256_castsi256_pd(_mm256_slli_epi64(m64, 52));
}

inline __m256d exp_vec(__m256d x) {
  const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  __m256d xc = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-746.0)), _mm256_set1_pd(710.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), xc);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  // Taylor series of e^r to degree 13; |r| <= ln2/2.
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // Split the scale so both halves stay normal over the clamped range.
  const __m256d half = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
  const __m256d rest = _mm256_sub_pd(n, half);
  __m256d y = _mm256_mul_pd(_mm256_mul_pd(p, exp2_int(half)), exp2_int(rest));
  return _mm256_blendv_pd(y, x, nan_mask);
}

inline __m256d log_vec(__m256d x) {
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d inf = _mm256_set1_pd(INFINITY);

  // Scale subnormals into the normal range.
  const __m256d tiny = _mm256_cmp_pd(x, _mm256_set1_pd(2.2250738585072014e-308), _CMP_LT_OQ);
  __m256d xs = _mm256_blendv_pd(x, _mm256_mul_pd(x, _mm256_set1_pd(4503599627370496.0)), tiny);
  __m256d k_adj = _mm256_and_pd(tiny, _mm256_set1_pd(-52.0));

  const __m256i bits = _mm256_castpd_si256(xs);
  // Exponent field to double via the 2^52 magic-number trick.
  const __m256i ebits = _mm256_srli_epi64(bits, 52);
  const __m256d magic = _mm256_set1_pd(4503599627370496.0);
  __m256d k = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(ebits, _mm256_castpd_si256(magic))), magic);
  k = _mm256_add_pd(_mm256_sub_pd(k, _mm256_set1_pd(1023.0)), k_adj);

  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000ll);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(1.4142135623730951), _CMP_GE_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  k = _mm256_add_pd(k, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

  const __m256d f = _mm256_sub_pd(m, _mm256_set1_pd(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  __m256d t1 = _mm256_fmadd_pd(w, _mm256_set1_pd(1.531383769920937332e-01),
                               _mm256_set1_pd(2.222219843214978396e-01));
  t1 = _mm256_fmadd_pd(w, t1, _mm256_set1_pd(3.999999999940941908e-01));
  t1 = _mm256_mul_pd(w, t1);
  __m256d t2 = _mm256_fmadd_pd(w, _mm256_set1_pd(1.479819860511658591e-01),
                               _mm256_set1_pd(1.818357216161805012e-01));
  t2 = _mm256_fmadd_pd(w, t2, _mm256_set1_pd(2.857142874366239149e-01));
  t2 = _mm256_fmadd_pd(w, t2, _mm256_set1_pd(6.666666666666735130e-01));
  t2 = _mm256_mul_pd(z, t2);
  const __m256d R = _mm256_add_pd(t1, t2);
  const __m256d hfsq = _mm256_mul_pd(_mm256_set1_pd(0.5), _mm256_mul_pd(f, f));
  // k*ln2_hi - ((hfsq - (s*(hfsq+R) + k*ln2_lo)) - f)
  const __m256d inner = _mm256_fmadd_pd(s, _mm256_add_pd(hfsq, R), _mm256_mul_pd(k, ln2_lo));
  __m256d y = _mm256_sub_pd(_mm256_mul_pd(k, ln2_hi),
                            _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f));

  const __m256d is_inf = _mm256_cmp_pd(x, inf, _CMP_EQ_OQ);
  y = _mm256_blendv_pd(y, inf, is_inf);
  const __m256d invalid = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_NGT_UQ);
  return _mm256_blendv_pd(y, _mm256_set1_pd(NAN), invalid);
}

inline __m256d sigmoid_vec(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d abs_x = _mm256_andnot_pd(sign_mask, x);
  const __m256d e = exp_vec(_mm256_xor_pd(abs_x, sign_mask));
  const __m256d denom = _mm256_add_pd(_mm256_set1_pd(1.0), e);
  const __m256d pos = _mm256_div_pd(_mm256_set1_pd(1.0), denom);
  const __m256d negv = _mm256_div_pd(e, denom);
  const __m256d is_neg = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ);
  return _mm256_blendv_pd(pos, negv, is_neg);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  for_each_vec2(a, b, out, n, 0.0, [](__m256d x, __m256d y) { return _mm256_add_pd(x, y); });
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  for_each_vec2(a, b, out, n, 0.0, [](__m256d x, __m256d y) { return _mm256_sub_pd(x, y); });
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  for_each_vec2(a, b, out, n, 0.0, [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); });
}

bool div(const double* a, const double* b, double* out, std::size_t n) {
  __m256d zero_seen = _mm256_setzero_pd();
  const __m256d zero = _mm256_setzero_pd();
  for_each_vec2(a, b, out, n, 1.0, [&](__m256d x, __m256d y) {
    zero_seen = _mm256_or_pd(zero_seen, _mm256_cmp_pd(y, zero, _CMP_EQ_OQ));
    return _mm256_div_pd(x, y);
  });
  return _mm256_movemask_pd(zero_seen) == 0;
}

void neg(const double* a, double* out, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  for_each_vec(a, out, n, [&](__m256d x) { return _mm256_xor_pd(x, sign); });
}

void exp(const double* a, double* out, std::size_t n) {
  for_each_vec(a, out, n, exp_vec);
}

bool log(const double* a, double* out, std::size_t n) {
  bool ok = true;
  std::size_t i = 0;
  const __m256d zero = _mm256_setzero_pd();
  __m256d bad = _mm256_setzero_pd();
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d x = _mm256_loadu_pd(a + i);
    bad = _mm256_or_pd(bad, _mm256_cmp_pd(x, zero, _CMP_NGT_UQ));
    _mm256_storeu_pd(out + i, log_vec(x));
  }
  ok = _mm256_movemask_pd(bad) == 0;
  if (i < n) {
    alignas(32) double ta[kWidth] = {1.0, 1.0, 1.0, 1.0};
    alignas(32) double to[kWidth];
    std::memcpy(ta, a + i, (n - i) * sizeof(double));
    for (std::size_t j = 0; j < n - i; ++j) ok &= ta[j] > 0.0;
    _mm256_store_pd(to, log_vec(_mm256_load_pd(ta)));
    std::memcpy(out + i, to, (n - i) * sizeof(double));
  }
  return ok;
}

void sigmoid(const double* a, double* out, std::size_t n) {
  for_each_vec(a, out, n, sigmoid_vec);
}

bool pow(const double* a, double k, double* out, std::size_t n) {
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::pow(a[i], k);
    ok &= !(std::isnan(out[i]) && !std::isnan(a[i]));
  }
  return ok;
}

void clamp(const double* a, double lo, double hi, double* out, std::size_t n) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  // Operand order keeps NaN inputs as NaN (max/min return the second operand on NaN).
  for_each_vec(a, out, n, [&](__m256d x) { return _mm256_min_pd(vhi, _mm256_max_pd(vlo, x)); });
}

}  // namespace

const Kernels& avx2_table() {
  static const Kernels k{Isa::Avx2, "avx2", add, sub, mul, div, neg, exp, log, sigmoid, pow, clamp};
  return k;
}

}  // namespace dice::simd
