#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "geoclade/kernels.hpp"

using namespace geoclade::kernels;

namespace {

struct Data {
  std::vector<double> values;
  std::size_t n;
  int dims;
  ObsView view() const { return {values.data(), n, dims}; }
};

Data make_data(std::size_t n, int dims, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 3.0);
  Data d{std::vector<double>(n * dims), n, dims};
  for (auto& v : d.values) v = z(rng);
  return d;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("active table is one of the known variants") {
  const auto& t = active();
  CHECK((t.name == "scalar" || t.name == "avx2"));
}

TEST_CASE("vector kernels agree with the scalar reference") {
  const KernelTable* fast = avx2_table();
  if (!fast) {
    MESSAGE("no vector kernels on this host");
    return;
  }
  const KernelTable& ref = scalar_table();
  std::mt19937_64 rng(42);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 257u}) {
    for (int dims : {2, 3, 5, 8}) {
      const Data d = make_data(std::max<std::size_t>(n, 1), dims, rng);
      std::vector<double> mean(dims), diag(dims > 2 ? dims - 2 : 1);
      for (auto& m : mean) m = std::normal_distribution<double>(0, 1)(rng);
      for (auto& x : diag) x = 0.1 + std::uniform_real_distribution<double>(0, 2)(rng);
      StructuredPrecision p{mean.data(), 1.3, -0.4, 0.9, diag.data(), dims};

      std::vector<std::int32_t> rows;
      for (std::size_t i = 0; i < n; ++i)
        if (rng() % 3) rows.push_back(static_cast<std::int32_t>(i));
      if (rows.empty() && n > 0) rows.push_back(0);

      CHECK(rel_diff(fast->quadform_sum(d.view(), {}, n, p), ref.quadform_sum(d.view(), {}, n, p)) <
            1e-12);
      if (!rows.empty()) {
        CHECK(rel_diff(fast->quadform_sum(d.view(), rows, 0, p),
                       ref.quadform_sum(d.view(), rows, 0, p)) < 1e-12);
      }

      Moments a(dims), b(dims);
      fast->moments(d.view(), rows, n, a);
      ref.moments(d.view(), rows, n, b);
      CHECK(a.count == b.count);
      CHECK(rel_diff(a.cross12, b.cross12) < 1e-12);
      for (int j = 0; j < dims; ++j) {
        CHECK(rel_diff(a.sum[j], b.sum[j]) < 1e-12);
        CHECK(rel_diff(a.sumsq[j], b.sumsq[j]) < 1e-12);
      }
    }
  }

  for (std::size_t len : {0u, 1u, 15u, 31u, 32u, 33u, 64u, 100u, 1000u}) {
    std::vector<std::uint8_t> x(len), y(len);
    for (std::size_t i = 0; i < len; ++i) {
      x[i] = "ACGT-"[rng() % 5];
      y[i] = rng() % 4 ? x[i] : "ACGT-"[rng() % 5];
    }
    CHECK(fast->hamming(x.data(), y.data(), len) == ref.hamming(x.data(), y.data(), len));
  }
}

TEST_CASE("scalar quadratic form matches a direct evaluation") {
  const double y[] = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};  // 2 rows, 3 dims, column-major
  ObsView v{y, 2, 3};
  const double mean[] = {0.0, 1.0, 2.0};
  const double diag[] = {0.5};
  StructuredPrecision p{mean, 2.0, 0.5, 1.0, diag, 3};
  // row 0: z = (1, 2, 3); row 1: z = (2, 3, 4)
  const double q0 = 2 * 1 + 2 * 0.5 * 1 * 2 + 1 * 4 + 0.5 * 9;
  const double q1 = 2 * 4 + 2 * 0.5 * 2 * 3 + 1 * 9 + 0.5 * 16;
  CHECK(scalar_table().quadform_sum(v, {}, 2, p) == doctest::Approx(q0 + q1));
}
