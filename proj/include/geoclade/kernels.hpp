#pragma once

// Data-parallel inner loops used by the sampler and the network builder.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant compiled in its own translation unit. The active table is chosen at
// runtime from CPU features; GEOCLADE_KERNELS=scalar|avx2 overrides the choice.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace geoclade::kernels {

/// Column-major N x d observation matrix: column j occupies
/// data[j * stride, j * stride + N).
struct ObsView {
  const double* data = nullptr;
  std::size_t stride = 0;
  int dims = 0;

  const double* column(int j) const { return data + static_cast<std::size_t>(j) * stride; }
};

/// Precision of a Gaussian whose covariance is a free 2x2 block on the first two
/// coordinates and diagonal elsewhere.
struct StructuredPrecision {
  const double* mean = nullptr;   // length dims
  double p11 = 1.0, p12 = 0.0, p22 = 1.0;
  const double* diag = nullptr;   // length dims - 2, precisions of coordinates 3..d
  int dims = 2;
};

/// Sums over a set of rows. `sum` and `sumsq` have length dims.
struct Moments {
  double count = 0.0;
  std::vector<double> sum;
  std::vector<double> sumsq;
  double cross12 = 0.0;

  explicit Moments(int dims = 0) : sum(dims, 0.0), sumsq(dims, 0.0) {}
};

struct KernelTable {
  std::string_view name;
  /// Sum over the selected rows of (y - mean)' P (y - mean). `rows` empty with
  /// `n_all` > 0 means rows [0, n_all).
  double (*quadform_sum)(const ObsView& obs, std::span<const std::int32_t> rows,
                         std::size_t n_all, const StructuredPrecision& prec);
  void (*moments)(const ObsView& obs, std::span<const std::int32_t> rows, std::size_t n_all,
                  Moments& out);
  std::size_t (*hamming)(const std::uint8_t* a, const std::uint8_t* b, std::size_t len);
};

const KernelTable& scalar_table();

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

/// The table selected for this process.
const KernelTable& active();

}  // namespace geoclade::kernels
