#pragma once

// Forward simulation of sequences, migrations and located observations.

#include <cstdint>
#include <string>
#include <vector>

#include "geoclade/seqio.hpp"

namespace geoclade {

struct SynthConfig {
  int n_haplotypes = 8;
  int n_observations = 60;
  int effective_sites = 0;  // 0: one per tree edge
  int true_K = 1;
  double separation = 6.0;  // distance between neighbouring cluster means, in geo_sd units
  double geo_sd = 1.0;      // within-cluster standard deviation in degrees
  double cov_sd = 1.0;
  int dims = 2;
  double base_lon = 40.0;
  double base_lat = 45.0;
  std::uint64_t seed = 1;
};

struct SynthTruth {
  std::vector<int> parent;      // haplotype tree, -1 at the root
  int root = 0;
  int K = 0;
  std::vector<int> m;           // migrating haplotypes, sorted
  std::vector<int> founders;    // per migration: first haplotype of the new cluster
  std::vector<int> hap_label;   // cluster of each haplotype's own lineage
  std::vector<int> c;           // cluster per observation
  std::vector<int> obs_hap;     // haplotype per observation
  std::vector<std::vector<double>> means;  // raw units, per cluster
};

struct SynthData {
  SequenceSet sequences;
  ObservationTable observations;
  SynthTruth truth;
};

/// Raises ConfigError for infeasible settings.
SynthData generate(const SynthConfig& cfg);

/// Coordinate table text, one observation per line.
std::string format_coords(const ObservationTable& obs);

std::string truth_json(const SynthConfig& cfg, const SynthTruth& truth);

}  // namespace geoclade
