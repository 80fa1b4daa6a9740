#include "geoclade/distributions.hpp"

#include <cmath>
#include <limits>

#include "geoclade/errors.hpp"

namespace geoclade {

namespace {
constexpr double kLogPi = 1.1447298858494001741;
constexpr double kLog2 = 0.69314718055994530942;

double chi_square(double dof, std::mt19937_64& rng) {
  return 2.0 * std::gamma_distribution<double>(0.5 * dof, 1.0)(rng);
}
}  // namespace

double standard_normal(std::mt19937_64& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

double log_multigamma2(double x) {
  return 0.5 * kLogPi + std::lgamma(x) + std::lgamma(x - 0.5);
}

Sym2 sample_inverse_wishart(double nu, const Sym2& psi, std::mt19937_64& rng) {
  if (!(nu > 1.0)) throw InternalError("inverse-Wishart needs nu > 1");
  // W ~ Wishart(nu, psi^-1) by the Bartlett decomposition, then invert.
  const Sym2 s = psi.inverse();
  const double l11 = std::sqrt(s.a);
  const double l21 = s.b / l11;
  const double l22 = std::sqrt(s.c - l21 * l21);
  const double a11 = std::sqrt(chi_square(nu, rng));
  const double a22 = std::sqrt(chi_square(nu - 1.0, rng));
  const double a21 = standard_normal(rng);
  // B = L * A (lower triangular).
  const double b11 = l11 * a11;
  const double b21 = l21 * a11 + l22 * a21;
  const double b22 = l22 * a22;
  const Sym2 w{b11 * b11, b11 * b21, b21 * b21 + b22 * b22};
  return w.inverse();
}

double log_inverse_wishart(const Sym2& sigma, double nu, const Sym2& psi) {
  if (!sigma.positive_definite()) return -std::numeric_limits<double>::infinity();
  const Sym2 inv = sigma.inverse();
  const double trace = psi.a * inv.a + 2.0 * psi.b * inv.b + psi.c * inv.c;
  return 0.5 * nu * std::log(psi.det()) - nu * kLog2 - log_multigamma2(0.5 * nu) -
         0.5 * (nu + 3.0) * std::log(sigma.det()) - 0.5 * trace;
}

double sample_inverse_gamma(double alpha, double beta, std::mt19937_64& rng) {
  return beta / std::gamma_distribution<double>(alpha, 1.0)(rng);
}

double log_inverse_gamma(double x, double alpha, double beta) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return alpha * std::log(beta) - std::lgamma(alpha) - (alpha + 1.0) * std::log(x) - beta / x;
}

double log_normal(double x, double mean, double var) {
  const double z = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + z * z / var);
}

std::array<double, 2> sample_normal2(const std::array<double, 2>& mean, const Sym2& cov,
                                     std::mt19937_64& rng) {
  const double l11 = std::sqrt(cov.a);
  const double l21 = cov.b / l11;
  const double l22 = std::sqrt(cov.c - l21 * l21);
  const double z1 = standard_normal(rng);
  const double z2 = standard_normal(rng);
  return {mean[0] + l11 * z1, mean[1] + l21 * z1 + l22 * z2};
}

double log_normal2(const std::array<double, 2>& x, const std::array<double, 2>& mean,
                   const Sym2& cov) {
  const Sym2 p = cov.inverse();
  const double z1 = x[0] - mean[0], z2 = x[1] - mean[1];
  const double q = p.a * z1 * z1 + 2.0 * p.b * z1 * z2 + p.c * z2 * z2;
  return -kLog2Pi - 0.5 * std::log(cov.det()) - 0.5 * q;
}

// Acklam's rational approximation refined by one Halley step.
double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double lo = 0.02425, hi = 1.0 - lo;
  double x;
  if (p < lo) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= hi) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

}  // namespace geoclade
