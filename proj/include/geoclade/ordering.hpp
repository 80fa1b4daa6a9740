#pragma once

// Temporal orderings of replication and mutation events on a rooted tree:
// exact counts for small trees and the single-draw importance estimator.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "geoclade/haplonet.hpp"

namespace geoclade {

using OrderingCount = unsigned __int128;

struct EventSchedule {
  int root = 0;
  std::vector<int> count;                  // observed copies per node
  std::vector<int> replications;           // count + children - 1
  std::vector<std::vector<int>> children;  // each child gets one mutation
  bool valid = true;                       // false when some node has a negative budget
  std::size_t total_events = 0;

  std::size_t size() const { return count.size(); }
};

EventSchedule make_schedule(const RootedTree& tree, const std::vector<int>& counts);
EventSchedule make_schedule(const Network& net, const TreeState& t);

struct OrderingEvent {
  int node = 0;
  int child = -1;  // -1 for a replication
};

struct OrderingDraw {
  std::vector<OrderingEvent> events;
  double log_q = 0.0;
};

/// Exact number of valid orderings. Raises CapExceededError above `cap` events.
OrderingCount count_orderings_exact(const EventSchedule& s, std::size_t cap = 22);
OrderingCount count_orderings_exact(const Network& net, const TreeState& t, std::size_t cap = 22);

/// Uniform choice among available moves at each step.
OrderingDraw draw_ordering(const EventSchedule& s, std::mt19937_64& rng);

/// log(1/q(O*)) of one fresh draw; -inf for an invalid schedule.
double log_estimate_orderings(const EventSchedule& s, std::mt19937_64& rng);

/// Replays a draw and checks the copy-count rules and final counts.
bool check_ordering(const EventSchedule& s, const std::vector<OrderingEvent>& events);

struct RootPosterior {
  std::vector<std::vector<int>> trees;       // canonical deleted vectors
  std::vector<std::vector<double>> joint;    // [tree][root]
  std::vector<double> root_marginal;
  std::vector<double> tree_marginal;
  std::vector<std::vector<double>> root_given_tree;  // [tree][root]
  std::vector<std::vector<double>> tree_given_root;  // [root][tree]
};

/// Exact posterior over (root, tree). Raises CapExceededError when any tree
/// or ordering count is beyond its cap.
RootPosterior root_posterior_exact(const Network& net, std::size_t tree_cap = 12,
                                   std::size_t event_cap = 22);

std::string to_string(OrderingCount v);
long double to_long_double(OrderingCount v);

}  // namespace geoclade
