#pragma once

// Two-chain MCMC over root, tree, migrations and clusterings.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "geoclade/clustmodel.hpp"
#include "geoclade/haplonet.hpp"
#include "geoclade/ordering.hpp"
#include "geoclade/units.hpp"

namespace geoclade {

struct RunConfig {
  int max_mig = 3;
  long iter = 10000;
  int ds = 3;
  long post_samples = 1000;
  int dims = 2;
  std::uint64_t seed = 1;
  int chains = 2;
  double burn_in_fraction = 0.9;
  int tree_every = 5;   // tree and migrating-haplotype sub-moves
  int hyper_every = 10;
  double tau = 1.0;     // likelihood tempering
  double wc_step = 1.0; // logit-scale step of the retention weight
  int g = 30;
  double v = 4.0;
  double psi = 0.0;     // 0 selects the data-driven default
  double root_tv_threshold = 0.1;
  double mean_threshold = 0.5;
  int threads = 0;      // 0: one per chain
  std::size_t node_budget = 5000;

  long burn_in() const;
};

/// Raises ConfigError on inconsistent settings.
void validate(const RunConfig& cfg);

struct Draw {
  int chain = 0;
  long iteration = 0;
  int root = 0;
  std::vector<int> deleted;
  int K = 0;
  std::vector<int> m;
  std::vector<int> c;        // raw labels
  std::vector<int> perm;     // raw label -> aligned label
  std::vector<Cluster> clusters;  // raw order
  int gamma = 4;
  double w_c = 0.5;
  double log_post = 0.0;

  int effective_migrations() const;
  int aligned_label(std::size_t row) const { return perm[c[row]]; }
  /// Cluster whose aligned label is `a`.
  const Cluster& aligned_cluster(int a) const;
};

struct MoveStats {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct ChainReport {
  MoveStats root, block, dimension, gamma;
  std::vector<long> root_visits;  // post-burn-in iterations per node
  std::vector<long> k_visits;     // post-burn-in iterations per total K
  double best_log_post = 0.0;
};

struct Diagnostics {
  double root_tv = 0.0;
  std::vector<double> mean_distance;  // per pivot label
  std::vector<int> map_effective;     // per chain
  bool root_converged = true;
  bool cluster_converged = true;
  bool converged() const { return root_converged && cluster_converged; }
};

struct PosteriorArchive {
  RunConfig config;
  PriorConfig prior;
  std::vector<Draw> draws;
  TreeHashTable trees;
  std::vector<ChainReport> chains;
  std::vector<int> pivot;  // pivot clustering per observation
  Diagnostics diagnostics;
};

/// Inputs shared by all chains. `net.counts` must hold observation counts.
struct Model {
  const Network& net;
  const NormalizedData& y;
  std::vector<int> obs_hap;
  std::vector<std::vector<std::int32_t>> rows_of_node;
  PriorConfig prior;

  Model(const Network& n, const NormalizedData& d, std::vector<int> haps, PriorConfig p);
};

struct ChainState {
  TreeState tree;
  std::vector<char> mask;
  double log_estimate = 0.0;  // log of the stored ordering-count estimate
  ClusterState clust;
  UnitTree units;
  std::vector<int> labels;    // per unit
  double w_c = 0.5;
};

/// One chain's kernels, exposed for testing.
class Chain {
 public:
  Chain(const Model& model, const RunConfig& cfg, std::uint64_t seed, bool start_full);

  void step_root();
  void step_tree_and_clustering(bool tree_moves);
  void step_dimension();
  void step_hyper();
  void gibbs_refresh();
  void iterate(long iteration);

  /// Clustering part of the log posterior (excludes the ordering estimate).
  double log_posterior() const;
  double log_posterior(const ChainState& s) const;

  const ChainState& state() const { return s_; }
  ChainReport& report() { return report_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  ChainState initial_tree();
  void set_units(ChainState& s) const;

  const Model& model_;
  const RunConfig& cfg_;
  std::mt19937_64 rng_;
  ChainState s_;
  ChainReport report_;
};

/// Prior settings implied by a run configuration.
PriorConfig prior_for(const RunConfig& cfg, const NormalizedData& y);

using ProgressFn = std::function<void(int chain, int percent)>;

PosteriorArchive run(const RunConfig& cfg, const Model& model, const ProgressFn& progress = {});

/// Maximizes the sum of score[i][assign[i]] over injective assignments of
/// rows to columns (rows <= columns).
std::vector<int> max_assignment(const std::vector<std::vector<double>>& score);

/// Label permutation (raw -> aligned) of a draw against a pivot clustering.
std::vector<int> relabel(const Draw& d, const std::vector<int>& pivot, const NormalizedData& y);

/// Rand index between two labellings.
double rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace geoclade
