#include "geoclade/clustmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "geoclade/errors.hpp"

namespace geoclade {

double NormalizedData::to_raw(int j, double x) const {
  if (j < 2) return geo_center[j] + geo_scale * x;
  return cov_center[j - 2] + cov_scale[j - 2] * x;
}

double NormalizedData::to_normalized(int j, double raw) const {
  if (j < 2) return (raw - geo_center[j]) / geo_scale;
  return (raw - cov_center[j - 2]) / cov_scale[j - 2];
}

NormalizedData normalize(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw DegenerateDataError("at least two observations are needed");
  const int dims = static_cast<int>(rows.front().size());
  NormalizedData out;
  out.dims = dims;
  out.n = rows.size();
  const double n = static_cast<double>(out.n);
  std::vector<double> mean(dims, 0.0), var(dims, 0.0);
  for (const auto& r : rows)
    for (int j = 0; j < dims; ++j) mean[j] += r[j] / n;
  for (const auto& r : rows)
    for (int j = 0; j < dims; ++j) var[j] += (r[j] - mean[j]) * (r[j] - mean[j]) / n;

  out.geo_center = {mean[0], mean[1]};
  const double geo_var = 0.5 * (var[0] + var[1]);
  if (!(geo_var > 0.0))
    throw DegenerateDataError("all observations share one geographic point");
  out.geo_scale = std::sqrt(geo_var);
  for (int j = 2; j < dims; ++j) {
    if (!(var[j] > 0.0))
      throw DegenerateDataError("covariate " + std::to_string(j - 1) + " has zero variance");
    out.cov_center.push_back(mean[j]);
    out.cov_scale.push_back(std::sqrt(var[j]));
  }
  out.values.resize(out.n * dims);
  for (std::size_t i = 0; i < out.n; ++i)
    for (int j = 0; j < dims; ++j) out.values[j * out.n + i] = out.to_normalized(j, rows[i][j]);
  return out;
}

NormalizedData normalize(const ObservationTable& obs) {
  std::vector<std::vector<double>> rows;
  rows.reserve(obs.size());
  for (const auto& r : obs.rows) rows.push_back(r.values);
  return normalize(rows);
}

PriorConfig default_prior(const NormalizedData& y, int k_max, int g, double v) {
  PriorConfig cfg;
  cfg.k_max = k_max;
  cfg.g = g;
  cfg.v = v;
  double range = 0.0;
  for (int j = 0; j < 2; ++j) {
    const auto col = y.view().column(j);
    const auto [lo, hi] = std::minmax_element(col, col + y.n);
    range += 0.5 * (*hi - *lo);
  }
  const double sd = 0.3 * range / 2.0;
  cfg.psi = sd * sd * std::max(1.0, g / 2.0 - 3.0);
  return cfg;
}

double Cluster::log_det() const {
  double v = std::log(block.det());
  for (double d : diag) v += std::log(d);
  return v;
}

kernels::StructuredPrecision Cluster::precision(std::vector<double>& diag_prec,
                                                Sym2& block_prec) const {
  block_prec = block.inverse();
  diag_prec.resize(diag.size());
  for (std::size_t j = 0; j < diag.size(); ++j) diag_prec[j] = 1.0 / diag[j];
  kernels::StructuredPrecision p;
  p.mean = mu.data();
  p.p11 = block_prec.a;
  p.p12 = block_prec.b;
  p.p22 = block_prec.c;
  p.diag = diag_prec.data();
  p.dims = dims();
  return p;
}

std::vector<std::vector<std::int32_t>> rows_by_label(const std::vector<int>& c, int n_labels) {
  std::vector<std::vector<std::int32_t>> out(n_labels);
  for (std::size_t i = 0; i < c.size(); ++i) out[c[i]].push_back(static_cast<std::int32_t>(i));
  return out;
}

double cluster_log_likelihood(const NormalizedData& y, std::span<const std::int32_t> rows,
                              const Cluster& k) {
  if (rows.empty()) return 0.0;
  if (!k.block.positive_definite()) throw InternalError("covariance block is not positive definite");
  std::vector<double> dp;
  Sym2 bp;
  const auto prec = k.precision(dp, bp);
  const double q = kernels::active().quadform_sum(y.view(), rows, 0, prec);
  const double n = static_cast<double>(rows.size());
  return -0.5 * n * (y.dims * kLog2Pi + k.log_det()) - 0.5 * q;
}

double log_likelihood(const NormalizedData& y, const ClusterState& s) {
  const auto rows = rows_by_label(s.c, static_cast<int>(s.clusters.size()));
  double total = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k)
    total += cluster_log_likelihood(y, rows[k], s.clusters[k]);
  return total;
}

double log_sigma_prior(const Cluster& k, int gamma, const PriorConfig& cfg) {
  double lp = log_inverse_wishart(k.block, gamma, Sym2{cfg.psi, 0.0, cfg.psi});
  for (double d : k.diag) lp += log_inverse_gamma(d, gamma, cfg.psi);
  return lp;
}

double log_cluster_prior(const Cluster& k, int gamma, const PriorConfig& cfg) {
  double lp = log_sigma_prior(k, gamma, cfg);
  for (double x : k.mu) lp += log_normal(x, 0.0, cfg.v);
  return lp;
}

double log_m_prior(const std::vector<int>& m, const std::vector<int>& counts) {
  double total = 0.0;
  for (int c : counts) total += c;
  std::map<int, int> mult;
  for (int h : m) ++mult[h];
  double lp = std::lgamma(static_cast<double>(m.size()) + 1.0);
  for (auto [h, k] : mult) {
    if (counts[h] <= 0) return -std::numeric_limits<double>::infinity();
    lp += k * std::log(counts[h] / total) - std::lgamma(k + 1.0);
  }
  return lp;
}

double log_k_prior(const PriorConfig& cfg) { return -std::log(cfg.k_max + 1.0); }

double log_gamma_prior(const PriorConfig& cfg) { return -std::log(cfg.g - 3.0); }

Cluster draw_prior_cluster(int dims, int gamma, const PriorConfig& cfg, std::mt19937_64& rng) {
  Cluster k;
  k.block = sample_inverse_wishart(gamma, Sym2{cfg.psi, 0.0, cfg.psi}, rng);
  for (int j = 2; j < dims; ++j) k.diag.push_back(sample_inverse_gamma(gamma, cfg.psi, rng));
  k.mu.resize(dims);
  const double sd = std::sqrt(cfg.v);
  for (int j = 0; j < dims; ++j) k.mu[j] = sd * standard_normal(rng);
  return k;
}

namespace {

kernels::Moments moments_of(const NormalizedData& y, std::span<const std::int32_t> rows) {
  kernels::Moments mom(y.dims);
  if (!rows.empty()) kernels::active().moments(y.view(), rows, 0, mom);
  return mom;
}

// Scatter of the rows about `centre`, lon/lat block and per-coordinate sums.
struct Scatter {
  Sym2 block{0.0, 0.0, 0.0};
  std::vector<double> diag;
};

Scatter scatter_about(const kernels::Moments& mom, const std::vector<double>& centre) {
  Scatter s;
  const double n = mom.count;
  auto sq = [&](int j) {
    return std::max(0.0, mom.sumsq[j] - 2.0 * centre[j] * mom.sum[j] + n * centre[j] * centre[j]);
  };
  if (n > 0) {
    s.block.a = sq(0);
    s.block.c = sq(1);
    s.block.b = mom.cross12 - centre[0] * mom.sum[1] - centre[1] * mom.sum[0] +
                n * centre[0] * centre[1];
    const double lim = std::sqrt(s.block.a * s.block.c);
    s.block.b = std::clamp(s.block.b, -lim, lim);
  }
  for (std::size_t j = 2; j < mom.sum.size(); ++j) s.diag.push_back(n > 0 ? sq(static_cast<int>(j)) : 0.0);
  return s;
}

std::vector<double> sample_mean(const kernels::Moments& mom) {
  std::vector<double> m(mom.sum.size(), 0.0);
  if (mom.count > 0)
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = mom.sum[j] / mom.count;
  return m;
}

}  // namespace

MuConditional mu_conditional(const kernels::Moments& mom, const Cluster& k,
                             const PriorConfig& cfg) {
  MuConditional out;
  const int dims = k.dims();
  out.mean.assign(dims, 0.0);
  const double tn = cfg.tau * mom.count;
  const Sym2 p = k.block.inverse();
  const Sym2 a{1.0 / cfg.v + tn * p.a, tn * p.b, 1.0 / cfg.v + tn * p.c};
  out.block_cov = a.inverse();
  const double b0 = cfg.tau * (p.a * mom.sum[0] + p.b * mom.sum[1]);
  const double b1 = cfg.tau * (p.b * mom.sum[0] + p.c * mom.sum[1]);
  out.mean[0] = out.block_cov.a * b0 + out.block_cov.b * b1;
  out.mean[1] = out.block_cov.b * b0 + out.block_cov.c * b1;
  for (int j = 2; j < dims; ++j) {
    const double prec = 1.0 / cfg.v + tn / k.diag[j - 2];
    out.diag_var.push_back(1.0 / prec);
    out.mean[j] = cfg.tau * mom.sum[j] / k.diag[j - 2] / prec;
  }
  return out;
}

double log_mu_conditional(const MuConditional& cond, const std::vector<double>& mu) {
  double lp = log_normal2({mu[0], mu[1]}, {cond.mean[0], cond.mean[1]}, cond.block_cov);
  for (std::size_t j = 2; j < mu.size(); ++j)
    lp += log_normal(mu[j], cond.mean[j], cond.diag_var[j - 2]);
  return lp;
}

namespace {

void draw_mu(const MuConditional& cond, Cluster& k, std::mt19937_64& rng) {
  const auto xy = sample_normal2({cond.mean[0], cond.mean[1]}, cond.block_cov, rng);
  k.mu[0] = xy[0];
  k.mu[1] = xy[1];
  for (std::size_t j = 2; j < k.mu.size(); ++j)
    k.mu[j] = cond.mean[j] + std::sqrt(cond.diag_var[j - 2]) * standard_normal(rng);
}

struct SigmaParams {
  double nu;
  Sym2 psi;
  double alpha;
  std::vector<double> beta;
};

SigmaParams sigma_params(const Scatter& s, double count, int gamma, const PriorConfig& cfg) {
  SigmaParams p;
  const double tn = cfg.tau * count;
  p.nu = gamma + tn;
  p.psi = Sym2{cfg.psi, 0.0, cfg.psi} + s.block.scaled(cfg.tau);
  p.alpha = gamma + 0.5 * tn;
  for (double d : s.diag) p.beta.push_back(cfg.psi + 0.5 * cfg.tau * d);
  return p;
}

void draw_sigma(const SigmaParams& p, Cluster& k, std::mt19937_64& rng) {
  k.block = sample_inverse_wishart(p.nu, p.psi, rng);
  for (std::size_t j = 0; j < k.diag.size(); ++j) k.diag[j] = sample_inverse_gamma(p.alpha, p.beta[j], rng);
}

double log_sigma(const SigmaParams& p, const Cluster& k) {
  double lp = log_inverse_wishart(k.block, p.nu, p.psi);
  for (std::size_t j = 0; j < k.diag.size(); ++j) lp += log_inverse_gamma(k.diag[j], p.alpha, p.beta[j]);
  return lp;
}

}  // namespace

void gibbs_mu(const NormalizedData& y, std::span<const std::int32_t> rows, Cluster& k,
              const PriorConfig& cfg, std::mt19937_64& rng) {
  const auto mom = moments_of(y, rows);
  draw_mu(mu_conditional(mom, k, cfg), k, rng);
}

void gibbs_sigma(const NormalizedData& y, std::span<const std::int32_t> rows, Cluster& k,
                 int gamma, const PriorConfig& cfg, std::mt19937_64& rng) {
  const auto mom = moments_of(y, rows);
  draw_sigma(sigma_params(scatter_about(mom, k.mu), mom.count, gamma, cfg), k, rng);
}

Cluster propose_cluster(const NormalizedData& y, std::span<const std::int32_t> rows, int gamma,
                        const PriorConfig& cfg, std::mt19937_64& rng) {
  const auto mom = moments_of(y, rows);
  Cluster k;
  k.mu.assign(y.dims, 0.0);
  k.diag.assign(y.dims - 2, 1.0);
  draw_sigma(sigma_params(scatter_about(mom, sample_mean(mom)), mom.count, gamma, cfg), k, rng);
  draw_mu(mu_conditional(mom, k, cfg), k, rng);
  return k;
}

double log_propose_cluster(const NormalizedData& y, std::span<const std::int32_t> rows,
                           const Cluster& k, int gamma, const PriorConfig& cfg) {
  const auto mom = moments_of(y, rows);
  const double ls = log_sigma(sigma_params(scatter_about(mom, sample_mean(mom)), mom.count, gamma, cfg), k);
  return ls + log_mu_conditional(mu_conditional(mom, k, cfg), k.mu);
}

}  // namespace geoclade
