#include "geoclade/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "geoclade/errors.hpp"

namespace geoclade {

EventSchedule make_schedule(const RootedTree& tree, const std::vector<int>& counts) {
  EventSchedule s;
  s.root = tree.root;
  s.count = counts;
  s.children = tree.children;
  s.replications.resize(counts.size());
  for (std::size_t h = 0; h < counts.size(); ++h) {
    const int ch = static_cast<int>(tree.children[h].size());
    s.replications[h] = counts[h] + ch - 1;
    if (s.replications[h] < 0) s.valid = false;
    s.total_events += static_cast<std::size_t>(std::max(0, s.replications[h])) + ch;
  }
  return s;
}

EventSchedule make_schedule(const Network& net, const TreeState& t) {
  return make_schedule(orient(net, tree_mask(net, t.deleted), t.root), net.counts);
}

namespace {

struct Counter {
  const EventSchedule& s;
  std::vector<int> copies, reps_left;
  std::vector<char> created;
  std::vector<int> parent;
  std::unordered_map<std::string, OrderingCount> memo;
  std::size_t remaining;

  explicit Counter(const EventSchedule& sched)
      : s(sched), copies(sched.size(), 0), reps_left(sched.replications),
        created(sched.size(), 0), parent(sched.size(), -1), remaining(sched.total_events) {
    for (std::size_t h = 0; h < s.size(); ++h)
      for (int c : s.children[h]) parent[c] = static_cast<int>(h);
    copies[s.root] = 1;
    created[s.root] = 1;
  }

  std::size_t pending(int h) const {
    std::size_t p = 0;
    for (int c : s.children[h]) p += created[c] ? 0 : 1;
    return p;
  }

  std::string key() const {
    std::string k(s.size() * 2, '\0');
    for (std::size_t h = 0; h < s.size(); ++h) {
      k[2 * h] = static_cast<char>(reps_left[h]);
      k[2 * h + 1] = created[h];
    }
    return k;
  }

  OrderingCount run() {
    if (remaining == 0) return 1;
    const std::string k = key();
    if (const auto it = memo.find(k); it != memo.end()) return it->second;
    OrderingCount total = 0;
    --remaining;
    for (std::size_t h = 0; h < s.size(); ++h) {
      if (!created[h] || copies[h] < 1) continue;
      if (reps_left[h] > 0) {
        --reps_left[h];
        ++copies[h];
        total += run();
        ++reps_left[h];
        --copies[h];
      }
      const std::size_t pend = pending(static_cast<int>(h));
      const bool can_mutate =
          copies[h] > 1 || (reps_left[h] == 0 && pend == 1);
      if (!can_mutate) continue;
      for (int c : s.children[h]) {
        if (created[c]) continue;
        --copies[h];
        created[c] = 1;
        copies[c] = 1;
        total += run();
        copies[c] = 0;
        created[c] = 0;
        ++copies[h];
      }
    }
    ++remaining;
    memo.emplace(k, total);
    return total;
  }
};

// Forward simulator shared by the estimator and draw_ordering.
struct Simulator {
  const EventSchedule& s;
  std::vector<int> copies, reps_left;
  std::vector<std::vector<int>> pending;
  std::vector<int> active;

  explicit Simulator(const EventSchedule& sched)
      : s(sched), copies(sched.size(), 0), reps_left(sched.replications), pending(sched.children) {
    copies[s.root] = 1;
    if (remaining(s.root) > 0) active.push_back(s.root);
  }

  int remaining(int h) const { return reps_left[h] + static_cast<int>(pending[h].size()); }
  int moves(int h) const {
    const int r = reps_left[h] > 0 ? 1 : 0;
    const int m = static_cast<int>(pending[h].size());
    const bool can_mutate = copies[h] > 1 || remaining(h) == 1;
    return r + (can_mutate ? m : 0);
  }

  template <class Record>
  double simulate(std::mt19937_64& rng, Record&& record) {
    double log_inv_q = 0.0;
    std::vector<int> per;
    per.reserve(s.size());
    while (!active.empty()) {
      int total = 0;
      per.resize(active.size());
      for (std::size_t a = 0; a < active.size(); ++a) {
        per[a] = moves(active[a]);
        total += per[a];
      }
      if (total == 0) throw InternalError("ordering draw reached a dead end");
      if (total > 1) log_inv_q += std::log(static_cast<double>(total));
      int pick = total == 1 ? 0 : std::uniform_int_distribution<int>(0, total - 1)(rng);
      std::size_t a = 0;
      while (pick >= per[a]) pick -= per[a++];
      const int h = active[a];
      if (reps_left[h] > 0 && pick == 0) {
        --reps_left[h];
        ++copies[h];
        record(h, -1);
      } else {
        if (reps_left[h] > 0) --pick;
        const int c = pending[h][pick];
        pending[h][pick] = pending[h].back();
        pending[h].pop_back();
        --copies[h];
        copies[c] = 1;
        record(h, c);
        if (remaining(c) > 0) active.push_back(c);
      }
      if (remaining(h) == 0) {
        active[a] = active.back();
        active.pop_back();
      }
    }
    return log_inv_q;
  }
};

}  // namespace

OrderingCount count_orderings_exact(const EventSchedule& s, std::size_t cap) {
  if (!s.valid) return 0;
  if (s.total_events > cap)
    throw CapExceededError("exact ordering count needs " + std::to_string(s.total_events) +
                           " events, above the cap of " + std::to_string(cap));
  Counter c(s);
  return c.run();
}

OrderingCount count_orderings_exact(const Network& net, const TreeState& t, std::size_t cap) {
  return count_orderings_exact(make_schedule(net, t), cap);
}

OrderingDraw draw_ordering(const EventSchedule& s, std::mt19937_64& rng) {
  if (!s.valid) throw ConfigError("tree orientation leaves an unobserved leaf");
  OrderingDraw d;
  d.events.reserve(s.total_events);
  Simulator sim(s);
  d.log_q = -sim.simulate(rng, [&](int h, int c) { d.events.push_back({h, c}); });
  return d;
}

double log_estimate_orderings(const EventSchedule& s, std::mt19937_64& rng) {
  if (!s.valid) return -std::numeric_limits<double>::infinity();
  Simulator sim(s);
  return sim.simulate(rng, [](int, int) {});
}

bool check_ordering(const EventSchedule& s, const std::vector<OrderingEvent>& events) {
  if (!s.valid) return false;
  const std::size_t n = s.size();
  std::vector<int> copies(n, 0), reps_left = s.replications;
  std::vector<char> created(n, 0);
  std::vector<std::vector<int>> pending = s.children;
  copies[s.root] = 1;
  created[s.root] = 1;
  auto remaining = [&](int h) { return reps_left[h] + static_cast<int>(pending[h].size()); };
  for (const auto& ev : events) {
    const int h = ev.node;
    if (h < 0 || static_cast<std::size_t>(h) >= n || !created[h] || copies[h] < 1) return false;
    if (ev.child < 0) {
      if (reps_left[h] <= 0) return false;
      --reps_left[h];
      ++copies[h];
      continue;
    }
    auto it = std::find(pending[h].begin(), pending[h].end(), ev.child);
    if (it == pending[h].end()) return false;
    pending[h].erase(it);
    --copies[h];
    if (copies[h] == 0 && remaining(h) > 0) return false;
    created[ev.child] = 1;
    copies[ev.child] = 1;
  }
  for (std::size_t h = 0; h < n; ++h) {
    if (!created[h] || remaining(static_cast<int>(h)) != 0 || copies[h] != s.count[h]) return false;
  }
  return events.size() == s.total_events;
}

RootPosterior root_posterior_exact(const Network& net, std::size_t tree_cap,
                                   std::size_t event_cap) {
  RootPosterior out;
  const auto res = enumerate_trees(net, tree_cap, [&](const std::vector<int>& d) {
    out.trees.push_back(d);
  });
  if (!res.available)
    throw CapExceededError("network has " + std::to_string(net.n_loop()) +
                           " loops, above the enumeration cap");
  const std::size_t n = net.n_nodes();
  std::vector<std::vector<long double>> counts(out.trees.size(), std::vector<long double>(n));
  long double total = 0;
  for (std::size_t t = 0; t < out.trees.size(); ++t) {
    const auto mask = tree_mask(net, out.trees[t]);
    for (std::size_t r = 0; r < n; ++r) {
      const auto sched = make_schedule(orient(net, mask, static_cast<int>(r)), net.counts);
      counts[t][r] = to_long_double(count_orderings_exact(sched, event_cap));
      total += counts[t][r];
    }
  }
  if (total <= 0) throw DegenerateDataError("no (root, tree) pair admits a valid ordering");
  out.joint.assign(out.trees.size(), std::vector<double>(n));
  out.root_marginal.assign(n, 0.0);
  out.tree_marginal.assign(out.trees.size(), 0.0);
  out.root_given_tree.assign(out.trees.size(), std::vector<double>(n, 0.0));
  out.tree_given_root.assign(n, std::vector<double>(out.trees.size(), 0.0));
  std::vector<long double> by_root(n, 0), by_tree(out.trees.size(), 0);
  for (std::size_t t = 0; t < out.trees.size(); ++t)
    for (std::size_t r = 0; r < n; ++r) {
      by_root[r] += counts[t][r];
      by_tree[t] += counts[t][r];
    }
  for (std::size_t t = 0; t < out.trees.size(); ++t) {
    out.tree_marginal[t] = static_cast<double>(by_tree[t] / total);
    for (std::size_t r = 0; r < n; ++r) {
      out.joint[t][r] = static_cast<double>(counts[t][r] / total);
      if (by_tree[t] > 0) out.root_given_tree[t][r] = static_cast<double>(counts[t][r] / by_tree[t]);
      if (by_root[r] > 0) out.tree_given_root[r][t] = static_cast<double>(counts[t][r] / by_root[r]);
    }
  }
  for (std::size_t r = 0; r < n; ++r) out.root_marginal[r] = static_cast<double>(by_root[r] / total);
  return out;
}

std::string to_string(OrderingCount v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

long double to_long_double(OrderingCount v) {
  const auto hi = static_cast<std::uint64_t>(v >> 64);
  const auto lo = static_cast<std::uint64_t>(v);
  return static_cast<long double>(hi) * 18446744073709551616.0L + static_cast<long double>(lo);
}

}  // namespace geoclade
