#pragma once

// Small-dimensional densities and samplers: 2x2 inverse-Wishart, inverse-gamma
// and Gaussians.

#include <array>
#include <random>

namespace geoclade {

/// Symmetric 2x2 matrix [[a, b], [b, c]].
struct Sym2 {
  double a = 1.0, b = 0.0, c = 1.0;

  double det() const { return a * c - b * b; }
  Sym2 inverse() const {
    const double d = det();
    return {c / d, -b / d, a / d};
  }
  bool positive_definite() const { return a > 0.0 && det() > 0.0; }
  Sym2 operator+(const Sym2& o) const { return {a + o.a, b + o.b, c + o.c}; }
  Sym2 scaled(double s) const { return {a * s, b * s, c * s}; }
};

inline constexpr double kLog2Pi = 1.8378770664093454836;

double log_multigamma2(double x);

/// Inverse-Wishart with `nu` degrees of freedom and scale `psi`; requires nu > 1.
Sym2 sample_inverse_wishart(double nu, const Sym2& psi, std::mt19937_64& rng);
double log_inverse_wishart(const Sym2& sigma, double nu, const Sym2& psi);

/// Inverse-gamma with shape `alpha` and scale `beta`.
double sample_inverse_gamma(double alpha, double beta, std::mt19937_64& rng);
double log_inverse_gamma(double x, double alpha, double beta);

double log_normal(double x, double mean, double var);
std::array<double, 2> sample_normal2(const std::array<double, 2>& mean, const Sym2& cov,
                                     std::mt19937_64& rng);
double log_normal2(const std::array<double, 2>& x, const std::array<double, 2>& mean,
                   const Sym2& cov);

double standard_normal(std::mt19937_64& rng);

/// Quantile of the standard normal distribution.
double normal_quantile(double p);

}  // namespace geoclade
