#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "geoclade/errors.hpp"
#include "geoclade/haplonet.hpp"
#include "oracles.hpp"

using namespace geoclade;
using namespace geoclade::oracle;

namespace {

std::size_t hamming(const std::string& a, const std::string& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

TEST_CASE("two haplotypes one mutation apart") {
  const auto net = build_network({"AC", "AG"}, {1, 1}, {0, 5000});
  CHECK(net.n_nodes() == 2);
  CHECK(net.n_edges() == 1);
  CHECK(net.n_loop() == 0);
}

TEST_CASE("distance three with ds=0 yields the mutation cube") {
  const std::vector<std::string> haps{"AAA", "CGT"};
  const auto net = build_network(haps, {1, 1}, {0, 5000});
  // oracle: every sequence on some shortest path is a mix of the two ends
  std::set<std::string> nodes;
  for (int mask = 0; mask < 8; ++mask) {
    std::string s = haps[0];
    for (int k = 0; k < 3; ++k)
      if (mask >> k & 1) s[k] = haps[1][k];
    nodes.insert(s);
  }
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& a : nodes)
    for (const auto& b : nodes)
      if (a < b && hamming(a, b) == 1) edges.insert({a, b});
  std::set<std::string> got(net.sequences.begin(), net.sequences.end());
  CHECK(got == nodes);
  std::set<std::pair<std::string, std::string>> got_edges;
  for (auto [u, v] : net.edges) {
    auto a = net.sequences[u], b = net.sequences[v];
    if (b < a) std::swap(a, b);
    got_edges.insert({a, b});
  }
  CHECK(got_edges == edges);
  CHECK(net.n_loop() == 12 - 8 + 1);
  CHECK(net.counts[0] == 1);
  CHECK(net.counts[1] == 1);
  for (std::size_t i = 2; i < net.n_nodes(); ++i) CHECK(net.counts[i] == 0);
}

TEST_CASE("every edge joins sequences one mutation apart and ds is monotone") {
  std::mt19937_64 rng(11);
  const std::string alphabet = "ACGT-";
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> haps;
    std::set<std::string> seen;
    while (haps.size() < 5) {
      std::string s(7, 'A');
      for (auto& ch : s) ch = alphabet[rng() % (rng() % 3 == 0 ? 5 : 2)];
      if (seen.insert(s).second) haps.push_back(s);
    }
    std::vector<int> counts(haps.size(), 1);
    std::set<std::string> prev_nodes;
    std::set<std::pair<std::string, std::string>> prev_edges;
    for (int ds = 0; ds <= 2; ++ds) {
      Network net;
      try {
        net = build_network(haps, counts, {ds, 5000});
      } catch (const SaturationError&) {
        break;
      }
      std::set<std::string> nodes(net.sequences.begin(), net.sequences.end());
      std::set<std::pair<std::string, std::string>> edges;
      for (auto [u, v] : net.edges) {
        REQUIRE(hamming(net.sequences[u], net.sequences[v]) == 1);
        auto a = net.sequences[u], b = net.sequences[v];
        if (b < a) std::swap(a, b);
        edges.insert({a, b});
      }
      CHECK(std::includes(nodes.begin(), nodes.end(), prev_nodes.begin(), prev_nodes.end()));
      CHECK(std::includes(edges.begin(), edges.end(), prev_edges.begin(), prev_edges.end()));
      prev_nodes = nodes;
      prev_edges = edges;
      for (std::size_t i = 0; i < haps.size(); ++i) CHECK(net.sequences[i] == haps[i]);
    }
  }
}

TEST_CASE("construction is invariant to input order") {
  const std::vector<std::string> haps{"AAAAA", "AACCA", "TTAAA", "AAAAG"};
  const auto a = build_network(haps, {1, 2, 3, 4}, {1, 5000});
  std::vector<std::string> rev(haps.rbegin(), haps.rend());
  const auto b = build_network(rev, {4, 3, 2, 1}, {1, 5000});
  CHECK(a.n_nodes() == b.n_nodes());
  CHECK(a.n_edges() == b.n_edges());
  std::set<std::string> na(a.sequences.begin(), a.sequences.end());
  std::set<std::string> nb(b.sequences.begin(), b.sequences.end());
  CHECK(na == nb);
}

TEST_CASE("saturation is reported") {
  CHECK_THROWS_AS(build_network({"AAAAAAAAAAAA", "CCCCCCCCCCCC"}, {1, 1}, {0, 100}),
                  SaturationError);
}

TEST_CASE("enumerate_trees on named examples") {
  SUBCASE("tree") {
    const auto net = network_from_edges(3, {{0, 1}, {1, 2}}, {1, 1, 1});
    std::vector<std::vector<int>> seen;
    const auto r = enumerate_trees(net, 12, [&](const std::vector<int>& d) { seen.push_back(d); });
    CHECK(r.count == 1);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].empty());
  }
  SUBCASE("4-cycle") {
    const auto net = network_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, {1, 1, 1, 1});
    CHECK(enumerate_trees(net, 12, {}).count == 4);
  }
  SUBCASE("two triangles joined by a bridge") {
    const auto net = network_from_edges(
        6, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}, {4, 5}, {3, 5}}, {1, 1, 1, 1, 1, 1});
    CHECK(enumerate_trees(net, 12, {}).count == 9);
  }
  SUBCASE("cap") {
    const auto net = network_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, {1, 1, 1, 1});
    CHECK_FALSE(enumerate_trees(net, 0, {}).available);
  }
}

TEST_CASE("enumerate_trees matches brute force on all small graphs") {
  // Every connected graph with at most 3 independent loops contains a spanning
  // tree plus at most 3 extra edges; running over all tree shapes and all such
  // additions covers every graph up to isomorphism.
  std::size_t graphs = 0;
  for (int n = 1; n <= 8; ++n) {
    std::set<std::string> shapes;
    std::vector<int> parent(n, -1);
    std::function<void(int)> rec = [&](int v) {
      if (v < n) {
        for (int p = 0; p < v; ++p) {
          parent[v] = p;
          rec(v + 1);
        }
        return;
      }
      if (!shapes.insert(shape(parent)).second) return;
      std::vector<std::pair<int, int>> base, extra;
      for (int u = 1; u < n; ++u) base.push_back({parent[u], u});
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          if (std::find(base.begin(), base.end(), std::make_pair(a, b)) == base.end())
            extra.push_back({a, b});
      const std::size_t x = extra.size();
      auto check = [&](const std::vector<std::pair<int, int>>& edges) {
        const auto net = network_from_edges(static_cast<std::size_t>(n), edges,
                                            std::vector<int>(n, 1));
        std::set<std::vector<int>> distinct;
        const auto r = enumerate_trees(net, 12, [&](const std::vector<int>& d) {
          REQUIRE(is_spanning_tree(net, d));
          REQUIRE(d == canonical_deleted(net, d));
          for (std::size_t j = 0; j < d.size(); ++j)
            REQUIRE(std::binary_search(net.loops[j].begin(), net.loops[j].end(), d[j]));
          distinct.insert(d);
        });
        REQUIRE(r.count == distinct.size());
        REQUIRE(r.count == brute_spanning_trees(static_cast<std::size_t>(n), edges));
        ++graphs;
      };
      check(base);
      for (std::size_t i = 0; i < x; ++i) {
        auto e1 = base;
        e1.push_back(extra[i]);
        check(e1);
        for (std::size_t j = i + 1; j < x; ++j) {
          auto e2 = e1;
          e2.push_back(extra[j]);
          check(e2);
          for (std::size_t k = j + 1; k < x; ++k) {
            auto e3 = e2;
            e3.push_back(extra[k]);
            check(e3);
          }
        }
      }
    };
    if (n == 1) {
      const auto net = network_from_edges(1, {}, {1});
      CHECK(enumerate_trees(net, 12, {}).count == 1);
      continue;
    }
    rec(1);
  }
  MESSAGE("graphs checked: " << graphs);
  CHECK(graphs > 100000);
}

TEST_CASE("tree hash table") {
  TreeHashTable t;
  t.record({1, 2});
  t.record({1, 2});
  CHECK(t.count({1, 2}) == 2);
  CHECK(t.total() == 2);
  t.record({2, 1});
  CHECK(t.entries().size() == 2);
  CHECK(t.mode() == std::vector<int>{1, 2});

  std::mt19937_64 rng(3);
  TreeHashTable big;
  std::map<std::vector<int>, std::uint64_t> reference;
  for (int i = 0; i < 100000; ++i) {
    std::vector<int> v{static_cast<int>(rng() % 7), static_cast<int>(rng() % 5),
                       static_cast<int>(rng() % 3)};
    big.record(v);
    ++reference[v];
  }
  CHECK(big.total() == 100000);
  CHECK(big.entries() == reference);
}

TEST_CASE("edge posterior") {
  SUBCASE("4-cycle under exact uniform draws") {
    const auto net = network_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, {1, 1, 1, 1});
    std::vector<std::vector<int>> trees;
    enumerate_trees(net, 12, [&](const std::vector<int>& d) { trees.push_back(d); });
    std::mt19937_64 rng(7);
    std::vector<std::vector<int>> samples;
    for (int i = 0; i < 10000; ++i) samples.push_back(trees[rng() % trees.size()]);
    for (double p : edge_posterior(samples, net)) CHECK(std::abs(p - 0.75) < 0.02);
  }
  SUBCASE("bridges are certain") {
    const auto net = network_from_edges(5, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}},
                                        {1, 1, 1, 1, 1});
    const auto p = edge_posterior({{net.loops[0][0]}, {net.loops[0][1]}}, net);
    CHECK(p[net.find_edge(2, 3)] == 1.0);
    CHECK(p[net.find_edge(3, 4)] == 1.0);
  }
}

TEST_CASE("orient and tree_cycle") {
  const auto net = network_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, {1, 1, 1, 1});
  const auto d = default_deleted(net);
  const auto mask = tree_mask(net, d);
  const auto t = orient(net, mask, 2);
  CHECK(t.depth[2] == 0);
  for (int v = 0; v < 4; ++v)
    if (v != 2) CHECK(t.depth[v] == t.depth[t.parent[v]] + 1);
  CHECK(tree_cycle(net, mask, d[0]).size() == 4);
}
