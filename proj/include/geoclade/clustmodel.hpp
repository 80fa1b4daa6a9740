#pragma once

// Gaussian cluster model over normalized geographic and covariate data:
// normalization, priors, likelihood and conjugate updates.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "geoclade/distributions.hpp"
#include "geoclade/kernels.hpp"
#include "geoclade/seqio.hpp"

namespace geoclade {

struct NormalizedData {
  int dims = 2;
  std::size_t n = 0;
  std::vector<double> values;  // column-major n x dims
  double geo_scale = 1.0;
  std::array<double, 2> geo_center{0.0, 0.0};
  std::vector<double> cov_center, cov_scale;  // per covariate

  double at(std::size_t i, int j) const { return values[static_cast<std::size_t>(j) * n + i]; }
  kernels::ObsView view() const { return {values.data(), n, dims}; }
  double to_raw(int j, double x) const;
  double to_normalized(int j, double raw) const;
};

/// Raises DegenerateDataError when all samples share one point or a covariate
/// is constant.
NormalizedData normalize(const ObservationTable& obs);
NormalizedData normalize(const std::vector<std::vector<double>>& rows);

struct PriorConfig {
  int k_max = 0;
  double psi = 1.0;
  int g = 30;
  double v = 4.0;    // prior variance of every mean coordinate
  double tau = 1.0;  // likelihood tempering; 0 samples the prior
};

/// psi chosen so that at gamma = g/2 the prior mean lon/lat variance equals
/// (0.3 * range / 2)^2, range being the mean normalized geographic range.
PriorConfig default_prior(const NormalizedData& y, int k_max, int g = 30, double v = 4.0);

struct Cluster {
  std::vector<double> mu;
  Sym2 block;                // lon/lat covariance
  std::vector<double> diag;  // variances of coordinates 3..d

  int dims() const { return static_cast<int>(mu.size()); }
  double log_det() const;
  /// Precision view; `diag_prec` receives 1/diag and must outlive the result.
  kernels::StructuredPrecision precision(std::vector<double>& diag_prec, Sym2& block_prec) const;
};

struct ClusterState {
  int K = 0;
  std::vector<int> m;               // sorted migrating haplotypes (network nodes)
  std::vector<int> c;               // per observation
  std::vector<Cluster> clusters;    // always k_max + 1 entries
  int gamma = 4;
};

/// Rows per label 0..n_labels-1.
std::vector<std::vector<std::int32_t>> rows_by_label(const std::vector<int>& c, int n_labels);

double cluster_log_likelihood(const NormalizedData& y, std::span<const std::int32_t> rows,
                              const Cluster& k);
double log_likelihood(const NormalizedData& y, const ClusterState& s);

double log_cluster_prior(const Cluster& k, int gamma, const PriorConfig& cfg);
double log_sigma_prior(const Cluster& k, int gamma, const PriorConfig& cfg);
/// Multinomial mass of the multiset m under frequencies counts/sum(counts).
double log_m_prior(const std::vector<int>& m, const std::vector<int>& counts);
double log_k_prior(const PriorConfig& cfg);
double log_gamma_prior(const PriorConfig& cfg);

Cluster draw_prior_cluster(int dims, int gamma, const PriorConfig& cfg, std::mt19937_64& rng);

/// Full conditionals with the likelihood raised to cfg.tau. Empty rows draw
/// from the prior.
void gibbs_mu(const NormalizedData& y, std::span<const std::int32_t> rows, Cluster& k,
              const PriorConfig& cfg, std::mt19937_64& rng);
void gibbs_sigma(const NormalizedData& y, std::span<const std::int32_t> rows, Cluster& k,
                 int gamma, const PriorConfig& cfg, std::mt19937_64& rng);

/// Parameter proposal given a cluster's members: covariance from a tempered
/// conjugate update about the member mean, then the mean from its conditional.
Cluster propose_cluster(const NormalizedData& y, std::span<const std::int32_t> rows, int gamma,
                        const PriorConfig& cfg, std::mt19937_64& rng);
double log_propose_cluster(const NormalizedData& y, std::span<const std::int32_t> rows,
                           const Cluster& k, int gamma, const PriorConfig& cfg);

/// Mean of the normal full conditional of mu and its covariance (block + diag).
struct MuConditional {
  std::vector<double> mean;
  Sym2 block_cov;
  std::vector<double> diag_var;
};
MuConditional mu_conditional(const kernels::Moments& mom, const Cluster& k,
                             const PriorConfig& cfg);
double log_mu_conditional(const MuConditional& cond, const std::vector<double>& mu);

}  // namespace geoclade
