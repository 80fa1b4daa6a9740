#pragma once

// Brute-force references shared by the unit tests and the acceptance binary.
// None of these touch the library's own counting or enumeration code.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "geoclade/ordering.hpp"

namespace geoclade::oracle {

// Rooted tree from a parent array (parent[root] = -1).
inline EventSchedule schedule_from_parents(const std::vector<int>& parent, const std::vector<int>& counts) {
  RootedTree t;
  t.parent = parent;
  t.children.resize(parent.size());
  for (std::size_t v = 0; v < parent.size(); ++v) {
    if (parent[v] < 0)
      t.root = static_cast<int>(v);
    else
      t.children[parent[v]].push_back(static_cast<int>(v));
  }
  return make_schedule(t, counts);
}

// Plain recursion over every event sequence, checking the copy rules directly.
struct Naive {
  const EventSchedule& s;
  std::vector<int> copies, reps, muts_left;
  std::vector<std::vector<char>> done;

  explicit Naive(const EventSchedule& sched) : s(sched) {
    const std::size_t n = s.size();
    copies.assign(n, 0);
    reps = s.replications;
    muts_left.resize(n);
    done.resize(n);
    for (std::size_t h = 0; h < n; ++h) {
      muts_left[h] = static_cast<int>(s.children[h].size());
      done[h].assign(s.children[h].size(), 0);
    }
    copies[s.root] = 1;
  }

  int left(std::size_t h) const { return reps[h] + muts_left[h]; }

  unsigned long long go() {
    bool finished = true;
    for (std::size_t h = 0; h < s.size(); ++h)
      if (left(h) > 0) finished = false;
    if (finished) {
      for (std::size_t h = 0; h < s.size(); ++h)
        if (copies[h] != s.count[h]) return 0;
      return 1;
    }
    unsigned long long total = 0;
    for (std::size_t h = 0; h < s.size(); ++h) {
      if (copies[h] == 0) continue;
      if (reps[h] > 0) {
        --reps[h];
        ++copies[h];
        total += go();
        ++reps[h];
        --copies[h];
      }
      for (std::size_t j = 0; j < s.children[h].size(); ++j) {
        if (done[h][j]) continue;
        // a haplotype may not vanish while it still has events to perform
        if (copies[h] == 1 && left(h) > 1) continue;
        const int c = s.children[h][j];
        done[h][j] = 1;
        --muts_left[h];
        --copies[h];
        ++copies[c];
        total += go();
        done[h][j] = 0;
        ++muts_left[h];
        ++copies[h];
        --copies[c];
      }
    }
    return total;
  }
};

// All rooted trees on n labelled nodes with root 0, as parent arrays where
// parent[v] < v (covers every shape up to relabelling).
inline void for_each_tree(int n, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> parent(n, -1);
  std::function<void(int)> rec = [&](int v) {
    if (v == n) {
      visit(parent);
      return;
    }
    for (int p = 0; p < v; ++p) {
      parent[v] = p;
      rec(v + 1);
    }
  };
  rec(1);
}

inline bool connected(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::function<int(int)> find = [&](int x) { return p[x] == x ? x : p[x] = find(p[x]); };
  std::size_t parts = n;
  for (auto [u, v] : edges) {
    const int a = find(u), b = find(v);
    if (a != b) {
      p[a] = b;
      --parts;
    }
  }
  return parts <= 1;
}

// Spanning trees by trying every edge subset of size n - 1.
inline std::size_t brute_spanning_trees(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  const std::size_t m = edges.size();
  std::size_t count = 0;
  for (std::uint32_t s = 0; s < (1u << m); ++s) {
    if (static_cast<std::size_t>(__builtin_popcount(s)) != n - 1) continue;
    std::vector<std::pair<int, int>> sub;
    for (std::size_t e = 0; e < m; ++e)
      if (s >> e & 1) sub.push_back(edges[e]);
    if (connected(n, sub)) ++count;
  }
  return count;
}

// Canonical form of a rooted tree given by parent[v] < v, used to skip
// duplicate tree shapes.
inline std::string shape(const std::vector<int>& parent) {
  const int n = static_cast<int>(parent.size());
  std::vector<std::vector<int>> ch(n);
  for (int v = 1; v < n; ++v) ch[parent[v]].push_back(v);
  std::function<std::string(int)> rec = [&](int u) {
    std::vector<std::string> parts;
    for (int c : ch[u]) parts.push_back(rec(c));
    std::sort(parts.begin(), parts.end());
    std::string s = "(";
    for (auto& p : parts) s += p;
    return s + ")";
  };
  return rec(0);
}

// Every connected graph on n nodes with at most `max_loops` independent
// loops, as a spanning tree shape plus extra edges (duplicates up to
// isomorphism included).
inline void for_each_graph(int n, int max_loops,
                           const std::function<void(const std::vector<std::pair<int, int>>&)>& visit) {
  std::vector<std::string> seen;
  for_each_tree(n, [&](const std::vector<int>& parent) {
    const std::string sh = shape(parent);
    if (std::find(seen.begin(), seen.end(), sh) != seen.end()) return;
    seen.push_back(sh);
    std::vector<std::pair<int, int>> base, extra;
    for (int u = 1; u < n; ++u) base.push_back({parent[u], u});
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (std::find(base.begin(), base.end(), std::make_pair(a, b)) == base.end()) extra.push_back({a, b});
    std::vector<std::pair<int, int>> edges = base;
    std::function<void(std::size_t, int)> add = [&](std::size_t from, int left) {
      visit(edges);
      if (left == 0) return;
      for (std::size_t i = from; i < extra.size(); ++i) {
        edges.push_back(extra[i]);
        add(i + 1, left - 1);
        edges.pop_back();
      }
    };
    add(0, max_loops);
  });
}

}  // namespace geoclade::oracle
