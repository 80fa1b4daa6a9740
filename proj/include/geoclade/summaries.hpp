#pragma once

// Posterior summaries computed from saved draws: root, location, migration,
// cluster and edge probabilities, the MAP tree, contour ellipses and
// covariate bands.

#include <array>
#include <string>
#include <vector>

#include "geoclade/sampler.hpp"

namespace geoclade {

struct SummaryInputs {
  const PosteriorArchive& archive;
  const Network& net;
  const ObservationTable& obs;
  const std::vector<int>& obs_hap;
  const NormalizedData& y;
};

struct SummaryReport {
  std::vector<double> root_probs;      // per network node
  std::vector<double> root_loc_probs;  // per location
  std::vector<int> top_locations;      // up to three, best first
  std::vector<double> mig_probs;       // effective migrations 0..max_mig
  int map_effective = 0;
  std::vector<std::vector<double>> cluster_probs;  // node x aligned label
  std::vector<double> edge_probs;
  std::vector<int> map_deleted;
  std::vector<std::pair<int, int>> map_edges;
  int map_root = 0;
  std::vector<int> levels;
  // chain x aligned label, raw units; empty when the label was never occupied
  std::vector<std::vector<std::vector<double>>> chain_means;
  double root_tv = 0.0;
  bool root_converged = true;
  bool cluster_converged = true;
};

SummaryReport summarize(const SummaryInputs& in);

/// Per-location ancestral probabilities, mass on each location's first row.
std::vector<double> ancestral_locations(const SummaryInputs& in);

/// Observed nodes closest to `root` along paths through unobserved nodes.
std::vector<int> nearest_observed(const Network& net, const std::vector<char>& mask, int root);

struct Ellipse {
  double cx = 0.0, cy = 0.0;
  double major = 0.0, minor = 0.0;  // semi-axes
  double angle = 0.0;               // radians, major axis from the x axis
};

/// Level set where a bivariate normal density is half its maximum.
Ellipse half_density_ellipse(double cx, double cy, const Sym2& cov);

/// Ellipse points, closed (first point repeated).
std::vector<std::array<double, 2>> ellipse_points(const Ellipse& e, int segments = 48);

struct ContourEllipse {
  int cluster = 0;  // aligned label
  int draw = -1;    // -1 for posterior-mean ellipses
  double weight = 0.0;  // share of draws with the cluster occupied (mean ellipses)
  Ellipse e;            // raw degrees
};

struct ContourSet {
  std::vector<ContourEllipse> draws;
  std::vector<ContourEllipse> means;
};

ContourSet contours(const PosteriorArchive& archive, const NormalizedData& y);

struct CovariateBand {
  int cluster = 0;
  int covariate = 0;  // 1-based, counting from the first non-geographic column
  double q05 = 0.0, q50 = 0.0, q95 = 0.0;
};

/// Medians over draws of each draw's 5/50/95% normal quantiles, raw units.
std::vector<CovariateBand> covariate_bands(const PosteriorArchive& archive, const NormalizedData& y);

std::string summary_json(const SummaryReport& r, const std::vector<std::string>& node_names);

}  // namespace geoclade
