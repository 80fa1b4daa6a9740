#include "geoclade/kernels.hpp"

#include <algorithm>

namespace geoclade::kernels {

namespace {

inline double quadform_row(const ObsView& obs, std::size_t row, const StructuredPrecision& p) {
  const double z1 = obs.column(0)[row] - p.mean[0];
  const double z2 = obs.column(1)[row] - p.mean[1];
  double q = p.p11 * z1 * z1 + 2.0 * p.p12 * z1 * z2 + p.p22 * z2 * z2;
  for (int j = 2; j < p.dims; ++j) {
    const double z = obs.column(j)[row] - p.mean[j];
    q += p.diag[j - 2] * z * z;
  }
  return q;
}

double quadform_sum_scalar(const ObsView& obs, std::span<const std::int32_t> rows,
                           std::size_t n_all, const StructuredPrecision& prec) {
  double total = 0.0;
  if (rows.empty()) {
    for (std::size_t i = 0; i < n_all; ++i) total += quadform_row(obs, i, prec);
  } else {
    for (const std::int32_t r : rows) total += quadform_row(obs, static_cast<std::size_t>(r), prec);
  }
  return total;
}

void moments_scalar(const ObsView& obs, std::span<const std::int32_t> rows, std::size_t n_all,
                    Moments& out) {
  out = Moments(obs.dims);
  auto add = [&](std::size_t r) {
    for (int j = 0; j < obs.dims; ++j) {
      const double v = obs.column(j)[r];
      out.sum[j] += v;
      out.sumsq[j] += v * v;
    }
    out.cross12 += obs.column(0)[r] * obs.column(1)[r];
  };
  if (rows.empty()) {
    for (std::size_t i = 0; i < n_all; ++i) add(i);
    out.count = static_cast<double>(n_all);
  } else {
    for (const std::int32_t r : rows) add(static_cast<std::size_t>(r));
    out.count = static_cast<double>(rows.size());
  }
}

std::size_t hamming_scalar(const std::uint8_t* a, const std::uint8_t* b, std::size_t len) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < len; ++i) d += (a[i] != b[i]) ? 1 : 0;
  return d;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &quadform_sum_scalar, &moments_scalar, &hamming_scalar};
  return table;
}

}  // namespace geoclade::kernels
