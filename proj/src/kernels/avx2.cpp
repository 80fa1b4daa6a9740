// AVX2/FMA variants. This file is compiled with -mavx2 -mfma and must only be
// entered after a runtime CPU check (see dispatch.cpp).

#include <immintrin.h>

#include "geoclade/kernels.hpp"

namespace geoclade::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Loads four values of column `col` either contiguously from `start` or
// through the index vector.
struct RowLoader {
  const std::int32_t* idx;

  __m256d load(const double* col, std::size_t start) const {
    if (idx == nullptr) return _mm256_loadu_pd(col + start);
    const __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + start));
    return _mm256_i32gather_pd(col, vi, 8);
  }
  std::size_t row(std::size_t k) const {
    return idx == nullptr ? k : static_cast<std::size_t>(idx[k]);
  }
};

double quadform_sum_avx2(const ObsView& obs, std::span<const std::int32_t> rows,
                         std::size_t n_all, const StructuredPrecision& p) {
  const RowLoader loader{rows.empty() ? nullptr : rows.data()};
  const std::size_t n = rows.empty() ? n_all : rows.size();

  const __m256d m1 = _mm256_set1_pd(p.mean[0]);
  const __m256d m2 = _mm256_set1_pd(p.mean[1]);
  const __m256d p11 = _mm256_set1_pd(p.p11);
  const __m256d p12x2 = _mm256_set1_pd(2.0 * p.p12);
  const __m256d p22 = _mm256_set1_pd(p.p22);

  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d z1 = _mm256_sub_pd(loader.load(obs.column(0), k), m1);
    const __m256d z2 = _mm256_sub_pd(loader.load(obs.column(1), k), m2);
    __m256d q = _mm256_mul_pd(_mm256_mul_pd(p11, z1), z1);
    q = _mm256_fmadd_pd(_mm256_mul_pd(p12x2, z1), z2, q);
    q = _mm256_fmadd_pd(_mm256_mul_pd(p22, z2), z2, q);
    for (int j = 2; j < p.dims; ++j) {
      const __m256d z = _mm256_sub_pd(loader.load(obs.column(j), k), _mm256_set1_pd(p.mean[j]));
      q = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_set1_pd(p.diag[j - 2]), z), z, q);
    }
    acc = _mm256_add_pd(acc, q);
  }
  double total = hsum(acc);
  for (; k < n; ++k) {
    const std::size_t r = loader.row(k);
    const double z1 = obs.column(0)[r] - p.mean[0];
    const double z2 = obs.column(1)[r] - p.mean[1];
    double q = p.p11 * z1 * z1 + 2.0 * p.p12 * z1 * z2 + p.p22 * z2 * z2;
    for (int j = 2; j < p.dims; ++j) {
      const double z = obs.column(j)[r] - p.mean[j];
      q += p.diag[j - 2] * z * z;
    }
    total += q;
  }
  return total;
}

void moments_avx2(const ObsView& obs, std::span<const std::int32_t> rows, std::size_t n_all,
                  Moments& out) {
  out = Moments(obs.dims);
  const RowLoader loader{rows.empty() ? nullptr : rows.data()};
  const std::size_t n = rows.empty() ? n_all : rows.size();
  const std::size_t n4 = n - n % 4;

  for (int j = 0; j < obs.dims; ++j) {
    const double* col = obs.column(j);
    __m256d s = _mm256_setzero_pd();
    __m256d ss = _mm256_setzero_pd();
    for (std::size_t k = 0; k < n4; k += 4) {
      const __m256d v = loader.load(col, k);
      s = _mm256_add_pd(s, v);
      ss = _mm256_fmadd_pd(v, v, ss);
    }
    double sum = hsum(s), sumsq = hsum(ss);
    for (std::size_t k = n4; k < n; ++k) {
      const double v = col[loader.row(k)];
      sum += v;
      sumsq += v * v;
    }
    out.sum[j] = sum;
    out.sumsq[j] = sumsq;
  }
  __m256d c = _mm256_setzero_pd();
  for (std::size_t k = 0; k < n4; k += 4) {
    c = _mm256_fmadd_pd(loader.load(obs.column(0), k), loader.load(obs.column(1), k), c);
  }
  double cross = hsum(c);
  for (std::size_t k = n4; k < n; ++k) {
    const std::size_t r = loader.row(k);
    cross += obs.column(0)[r] * obs.column(1)[r];
  }
  out.cross12 = cross;
  out.count = static_cast<double>(n);
}

std::size_t hamming_avx2(const std::uint8_t* a, const std::uint8_t* b, std::size_t len) {
  std::size_t d = 0;
  std::size_t i = 0;
  for (; i + 32 <= len; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    const auto eq = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(va, vb)));
    d += 32 - static_cast<std::size_t>(__builtin_popcount(eq));
  }
  for (; i < len; ++i) d += (a[i] != b[i]) ? 1 : 0;
  return d;
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{"avx2", &quadform_sum_avx2, &moments_avx2, &hamming_avx2};
  return table;
}

}  // namespace geoclade::kernels
