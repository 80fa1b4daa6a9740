#pragma once

// Relaxed-parsimony haplotype network, its cycle structure and the
// deleted-edge representation of spanning trees.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "geoclade/seqio.hpp"

namespace geoclade {

struct Network {
  std::vector<std::string> sequences;  // observed haplotypes first, then intermediates
  std::vector<int> counts;             // observation count per node; 0 for intermediates
  std::size_t n_observed = 0;
  std::vector<std::pair<int, int>> edges;      // u < v, sorted
  std::vector<std::vector<int>> incident;      // node -> edge indices
  std::vector<std::vector<int>> loops;         // fundamental cycles, sorted edge indices
  std::vector<int> loop_chord;                 // non-DFS-tree edge that closes each loop
  std::vector<char> on_loop;                   // per edge

  std::size_t n_nodes() const { return sequences.size(); }
  std::size_t n_edges() const { return edges.size(); }
  std::size_t n_loop() const { return loops.size(); }
  int other(int edge, int node) const {
    return edges[edge].first == node ? edges[edge].second : edges[edge].first;
  }
  int find_edge(int u, int v) const;
};

struct NetworkOptions {
  int ds = 0;
  std::size_t node_budget = 5000;
};

struct TreeState {
  std::vector<int> deleted;  // canonical: deleted[j] lies on loop j
  int root = 0;
};

/// Builds from haplotype rows; `counts` default to the haplotype counts.
Network build_network(const HaplotypeData& h, const NetworkOptions& opts);
Network build_network(const std::vector<std::string>& haplotypes, const std::vector<int>& counts,
                      const NetworkOptions& opts);

/// Assembles a network from an explicit graph (used for toy models and tests).
/// Sequences are left empty.
Network network_from_edges(std::size_t n_nodes, const std::vector<std::pair<int, int>>& edges,
                           const std::vector<int>& counts);

/// Fills incident/loops/loop_chord/on_loop from nodes and edges.
void compute_cycles(Network& net);

/// True when removing `deleted` leaves a spanning tree.
bool is_spanning_tree(const Network& net, const std::vector<int>& deleted);

/// Canonical loop-ordered vector for a set of deleted edges forming a cotree.
std::vector<int> canonical_deleted(const Network& net, std::vector<int> deleted_set);

/// The tree whose deleted edges are the DFS chords.
std::vector<int> default_deleted(const Network& net);

/// Per-edge membership in the tree induced by `deleted`.
std::vector<char> tree_mask(const Network& net, const std::vector<int>& deleted);

/// Edges on the unique cycle created by adding `edge` back to the tree.
std::vector<int> tree_cycle(const Network& net, const std::vector<char>& mask, int edge);

struct EnumerationResult {
  std::size_t count = 0;
  bool available = true;
};

/// Visits every spanning tree once (canonical deleted vector). Reports
/// unavailable when n_loop exceeds `cap`.
EnumerationResult enumerate_trees(const Network& net, std::size_t cap,
                                  const std::function<void(const std::vector<int>&)>& visit);

/// Counts of visited trees keyed by canonical deleted vector.
class TreeHashTable {
 public:
  void record(const std::vector<int>& deleted, std::uint64_t times = 1);
  void merge(const TreeHashTable& other);
  std::uint64_t count(const std::vector<int>& deleted) const;
  std::uint64_t total() const { return total_; }
  const std::map<std::vector<int>, std::uint64_t>& entries() const { return entries_; }
  /// Most visited vector; ties go to the smallest vector.
  std::vector<int> mode() const;

 private:
  std::map<std::vector<int>, std::uint64_t> entries_;
  std::uint64_t total_ = 0;
};

std::vector<double> edge_posterior(const std::vector<std::vector<int>>& deleted_samples,
                                   const Network& net);

/// Tree oriented away from a root.
struct RootedTree {
  int root = 0;
  std::vector<int> parent;       // -1 at root
  std::vector<int> parent_edge;  // -1 at root
  std::vector<std::vector<int>> children;
  std::vector<int> order;        // BFS order from the root
  std::vector<int> depth;
};

RootedTree orient(const Network& net, const std::vector<char>& mask, int root);

std::string network_json(const Network& net);
std::string network_edge_list(const Network& net);

}  // namespace geoclade
