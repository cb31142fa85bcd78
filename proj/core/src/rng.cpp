#include "heatest/rng.hpp"

#include <bit>
#if defined(__AVX2__) || defined(__AVX512F__)
#include <immintrin.h>
#endif
#include <cmath>
#include <vector>

namespace heatest {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Philox4x32::Key make_key(const SeedSpec& seed) noexcept {
  const std::uint64_t k = splitmix64(seed.master ^ splitmix64(seed.trajectory + 0x632BE59BD9B4E019ull));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

constexpr double kTwoPow32Inv = 1.0 / 4294967296.0;
constexpr double kTwoPow52 = 4503599627370496.0;
constexpr double kTwoPi = 6.283185307179586;
constexpr double kLn2 = 0.6931471805599453;
constexpr std::uint64_t kSqrtHalfBits = 0x3fe6a09e667f3bcdull;

// Branch-free log for u > 0 normal: mantissa reduced to [sqrt(1/2), sqrt(2)),
// then 2 atanh(s). Absolute error below 1e-15 on (0, 1].
inline double poly_log(double u) noexcept {
  const std::uint64_t adj = std::bit_cast<std::uint64_t>(u) + (0x3ff0000000000000ull - kSqrtHalfBits);
  const auto e = static_cast<std::int64_t>(adj >> 52) - 1023;
  const double m = std::bit_cast<double>((adj & 0x000fffffffffffffull) + kSqrtHalfBits);
  const double s = (m - 1.0) / (m + 1.0);
  const double s2 = s * s;
  double p = 1.0 / 23;
  p = p * s2 + 1.0 / 21;
  p = p * s2 + 1.0 / 19;
  p = p * s2 + 1.0 / 17;
  p = p * s2 + 1.0 / 15;
  p = p * s2 + 1.0 / 13;
  p = p * s2 + 1.0 / 11;
  p = p * s2 + 1.0 / 9;
  p = p * s2 + 1.0 / 7;
  p = p * s2 + 1.0 / 5;
  p = p * s2 + 1.0 / 3;
  return static_cast<double>(e) * kLn2 + (2.0 * s + 2.0 * s * s2 * p);
}

constexpr std::size_t kChunk = 256;

void box_muller(const double* __restrict u1, const double* __restrict u2, double* __restrict z0,
                double* __restrict z1) noexcept {
  for (std::size_t p = 0; p < kChunk; ++p) {
    const double r = std::sqrt(-2.0 * poly_log(u1[p]));
    // quadrant reduction is exact in u; t in [-pi/4, pi/4]
    const double q = std::nearbyint(4.0 * u2[p]);
    const double t = (u2[p] - 0.25 * q) * kTwoPi;
    const double t2 = t * t;
    const double sn =
        t * (1 + t2 * (-1.0 / 6 + t2 * (1.0 / 120 + t2 * (-1.0 / 5040 + t2 * (1.0 / 362880 +
            t2 * (-1.0 / 39916800 + t2 * (1.0 / 6227020800 + t2 * (-1.0 / 1307674368000))))))));
    const double cs =
        1 + t2 * (-0.5 + t2 * (1.0 / 24 + t2 * (-1.0 / 720 + t2 * (1.0 / 40320 +
            t2 * (-1.0 / 3628800 + t2 * (1.0 / 479001600 + t2 * (-1.0 / 87178291200 +
            t2 * (1.0 / 20922789888000))))))));
    const int qi = static_cast<int>(q) & 3;
    const double c = qi == 0 ? cs : qi == 1 ? -sn : qi == 2 ? -cs : sn;
    const double s = qi == 0 ? sn : qi == 1 ? cs : qi == 2 ? -sn : -cs;
    z0[p] = r * c;
    z1[p] = r * s;
  }
}

// Uniforms for one chunk. Block b (counter base_block + b) feeds pairs b and
// b + kChunk / 2. Integer-only up to the final exact conversion, so every
// code path yields identical bits.
void uniforms(std::uint32_t base_block, std::uint32_t step_lo, std::uint32_t step_hi,
              std::uint32_t purpose, Philox4x32::Key key, double* __restrict u1,
              double* __restrict u2) noexcept {
  constexpr std::size_t kBlocks = kChunk / 2;
  std::uint32_t ks0[10];
  std::uint32_t ks1[10];
  for (int r = 0; r < 10; ++r) {
    ks0[r] = key[0];
    ks1[r] = key[1];
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
#if defined(__AVX512F__)
  const __m512i m0 = _mm512_set1_epi64(kMul0);
  const __m512i m1 = _mm512_set1_epi64(kMul1);
  const __m512i lo = _mm512_set1_epi64(0xffffffffll);
  const __m512i expo = _mm512_set1_epi64(0x4330000000000000ll);
  const __m512d two52 = _mm512_set1_pd(kTwoPow52);
  const __m512d scale = _mm512_set1_pd(kTwoPow32Inv);
  const __m512d one = _mm512_set1_pd(1.0);
  auto to_double = [&](__m512i v) {
    return _mm512_sub_pd(_mm512_castsi512_pd(_mm512_or_si512(v, expo)), two52);
  };
  for (std::size_t b = 0; b < kBlocks; b += 8) {
    __m512i c0 = _mm512_add_epi64(_mm512_set1_epi64(base_block + b),
                                  _mm512_set_epi64(7, 6, 5, 4, 3, 2, 1, 0));
    __m512i c1 = _mm512_set1_epi64(step_lo);
    __m512i c2 = _mm512_set1_epi64(step_hi);
    __m512i c3 = _mm512_set1_epi64(purpose);
    for (int r = 0; r < 10; ++r) {
      const __m512i p0 = _mm512_mul_epu32(c0, m0);
      const __m512i p1 = _mm512_mul_epu32(c2, m1);
      const __m512i n0 = _mm512_xor_si512(_mm512_xor_si512(_mm512_srli_epi64(p1, 32), c1),
                                          _mm512_set1_epi64(ks0[r]));
      const __m512i n2 = _mm512_xor_si512(_mm512_xor_si512(_mm512_srli_epi64(p0, 32), c3),
                                          _mm512_set1_epi64(ks1[r]));
      c1 = _mm512_and_si512(p1, lo);
      c3 = _mm512_and_si512(p0, lo);
      c0 = n0;
      c2 = n2;
    }
    _mm512_storeu_pd(u1 + b, _mm512_mul_pd(_mm512_add_pd(to_double(c0), one), scale));
    _mm512_storeu_pd(u2 + b, _mm512_mul_pd(to_double(c1), scale));
    _mm512_storeu_pd(u1 + kBlocks + b, _mm512_mul_pd(_mm512_add_pd(to_double(c2), one), scale));
    _mm512_storeu_pd(u2 + kBlocks + b, _mm512_mul_pd(to_double(c3), scale));
  }
#elif defined(__AVX2__)
  const __m256i m0 = _mm256_set1_epi64x(kMul0);
  const __m256i m1 = _mm256_set1_epi64x(kMul1);
  const __m256i lo = _mm256_set1_epi64x(0xffffffffll);
  const __m256i expo = _mm256_set1_epi64x(0x4330000000000000ll);
  const __m256d two52 = _mm256_set1_pd(kTwoPow52);
  const __m256d scale = _mm256_set1_pd(kTwoPow32Inv);
  const __m256d one = _mm256_set1_pd(1.0);
  auto to_double = [&](__m256i v) {
    return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, expo)), two52);
  };
  for (std::size_t b = 0; b < kBlocks; b += 4) {
    __m256i c0 = _mm256_add_epi64(_mm256_set1_epi64x(base_block + b), _mm256_set_epi64x(3, 2, 1, 0));
    __m256i c1 = _mm256_set1_epi64x(step_lo);
    __m256i c2 = _mm256_set1_epi64x(step_hi);
    __m256i c3 = _mm256_set1_epi64x(purpose);
    for (int r = 0; r < 10; ++r) {
      const __m256i p0 = _mm256_mul_epu32(c0, m0);
      const __m256i p1 = _mm256_mul_epu32(c2, m1);
      const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p1, 32), c1),
                                          _mm256_set1_epi64x(ks0[r]));
      const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p0, 32), c3),
                                          _mm256_set1_epi64x(ks1[r]));
      c1 = _mm256_and_si256(p1, lo);
      c3 = _mm256_and_si256(p0, lo);
      c0 = n0;
      c2 = n2;
    }
    _mm256_storeu_pd(u1 + b, _mm256_mul_pd(_mm256_add_pd(to_double(c0), one), scale));
    _mm256_storeu_pd(u2 + b, _mm256_mul_pd(to_double(c1), scale));
    _mm256_storeu_pd(u1 + kBlocks + b, _mm256_mul_pd(_mm256_add_pd(to_double(c2), one), scale));
    _mm256_storeu_pd(u2 + kBlocks + b, _mm256_mul_pd(to_double(c3), scale));
  }
#else
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const auto r = Philox4x32::generate(
        {static_cast<std::uint32_t>(base_block + b), step_lo, step_hi, purpose}, {ks0[0], ks1[0]});
    u1[b] = (static_cast<double>(r[0]) + 1.0) * kTwoPow32Inv;
    u2[b] = static_cast<double>(r[1]) * kTwoPow32Inv;
    u1[kBlocks + b] = (static_cast<double>(r[2]) + 1.0) * kTwoPow32Inv;
    u2[kBlocks + b] = static_cast<double>(r[3]) * kTwoPow32Inv;
  }
#endif
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

// Box-Muller, two pairs per Philox block; counter (block, step lo, step hi, purpose).
// log/sin/cos are branch-free polynomials so the loops vectorize without
// relaxing IEEE semantics; results do not depend on the vector width.
void fill_normals(const SeedSpec& seed, std::uint64_t step, std::span<double> out) {
  const auto key = make_key(seed);
  const auto step_lo = static_cast<std::uint32_t>(step);
  const auto step_hi = static_cast<std::uint32_t>(step >> 32);
  const auto purpose = static_cast<std::uint32_t>(seed.purpose);
  const std::size_t n = out.size();
  const std::size_t pairs = (n + 1) / 2;

  double u1[kChunk];
  double u2[kChunk];
  double z0[kChunk];
  double z1[kChunk];
  for (std::size_t base = 0; base < pairs; base += kChunk) {
    // Always generate a full chunk: the vectorized and scalar tails of a
    // loop can round differently, so the chunk shape must not depend on n.
    const std::size_t m = std::min(kChunk, pairs - base);
    uniforms(static_cast<std::uint32_t>(base / 2), step_lo, step_hi, purpose, key, u1, u2);
    box_muller(u1, u2, z0, z1);
    for (std::size_t p = 0; p < m; ++p) {
      const std::size_t k = 2 * (base + p);
      out[k] = z0[p];
      if (k + 1 < n) out[k + 1] = z1[p];
    }
  }
}

double normal_at(const SeedSpec& seed, std::uint64_t step, std::uint64_t index) {
  std::vector<double> buf(index + 1);
  fill_normals(seed, step, buf);
  return buf[index];
}

}  // namespace heatest
