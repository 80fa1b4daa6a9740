#pragma once

// Tree-constrained clusterings.
//
// Migrating haplotypes ("hubs") split the tree into units: the components left
// after removing the hubs (clades), one unit per observation of a hub, and one
// unit per tree edge joining two hubs. Units and hubs form a bipartite tree. A
// labelling of the units is a valid clustering when every label occupies a
// connected set of units and each hub sees at most (copies + 1) labels.

#include <cstdint>
#include <random>
#include <vector>

#include "geoclade/clustmodel.hpp"
#include "geoclade/haplonet.hpp"

namespace geoclade {

enum class UnitKind : std::uint8_t { Clade, Observation, Edge };

struct UnitTree {
  std::vector<int> hub_node;  // per hub
  std::vector<int> hub_of;    // per network node, -1 for non-hubs
  std::vector<int> cap;       // per hub: copies + 1
  std::vector<UnitKind> kind;
  std::vector<std::vector<int>> unit_hubs;
  std::vector<std::vector<int>> hub_units;
  std::vector<std::vector<std::int32_t>> unit_rows;
  std::vector<int> unit_node;  // clade: smallest node; observation: hub node; edge: -1
  std::vector<int> unit_edge;  // edge units only
  std::vector<int> node_unit;  // clade unit of each non-hub node
  std::vector<int> row_unit;

  std::size_t size() const { return kind.size(); }
  std::size_t n_hubs() const { return hub_node.size(); }
};

/// Observation rows of every network node.
std::vector<std::vector<std::int32_t>> node_rows(const std::vector<int>& obs_hap,
                                                 std::size_t n_nodes);

UnitTree build_units(const Network& net, const std::vector<char>& mask, const std::vector<int>& m,
                     const std::vector<std::vector<std::int32_t>>& rows_of_node, std::size_t n_rows);

bool labels_valid(const UnitTree& u, const std::vector<int>& labels, int K);

/// Normalized prior of a unit labelling; -inf when invalid.
double log_allocation_prior(const UnitTree& u, const std::vector<int>& labels, int K);

std::vector<int> observation_labels(const UnitTree& u, const std::vector<int>& labels);

/// Label of every network node: its clade's label, or for a hub the label of
/// its first observation unit.
std::vector<int> node_labels(const UnitTree& u, const std::vector<int>& labels,
                             std::size_t n_nodes);

/// Whether some labelling of the empty units completes `c` into a valid
/// clustering under (m, tree).
bool is_valid_clustering(const std::vector<int>& c, const std::vector<int>& m, int K,
                         const Network& net, const std::vector<char>& mask,
                         const std::vector<int>& obs_hap);

/// Previous-label hints for the units of `u` taken from a labelling of `old`.
std::vector<int> carry_labels(const UnitTree& u, const UnitTree& old,
                              const std::vector<int>& old_labels, std::size_t n_nodes);

struct AllocationContext {
  const UnitTree& units;
  const NormalizedData& y;
  int K;
  int gamma;
  const PriorConfig& cfg;
  double w;  // retention weight
};

struct Allocation {
  std::vector<int> labels;
  double log_q = 0.0;
};

/// Grows a labelling unit by unit in a random order.
Allocation propose_allocation(const AllocationContext& ctx, const std::vector<int>& previous,
                              std::mt19937_64& rng);

/// Log probability that propose_allocation produces `labels` under a freshly
/// drawn order.
double replay_allocation(const AllocationContext& ctx, const std::vector<int>& labels,
                         const std::vector<int>& previous, std::mt19937_64& rng);

}  // namespace geoclade
