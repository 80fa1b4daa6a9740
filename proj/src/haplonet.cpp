#include "geoclade/haplonet.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "geoclade/errors.hpp"
#include "geoclade/kernels.hpp"
#include "json.hpp"

namespace geoclade {

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

std::size_t distance(const std::string& a, const std::string& b) {
  return kernels::active().hamming(reinterpret_cast<const std::uint8_t*>(a.data()),
                                   reinterpret_cast<const std::uint8_t*>(b.data()), a.size());
}

bool connected_without(const Network& net, const std::vector<char>& removed) {
  const std::size_t n = net.n_nodes();
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int e : net.incident[u]) {
      if (removed[e]) continue;
      const int v = net.other(e, u);
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == n;
}

// Kuhn augmenting path over loops -> candidate slots.
bool augment(int j, const std::vector<std::vector<int>>& adj, std::vector<int>& owner,
             std::vector<char>& visited, const std::vector<char>& blocked) {
  for (int k : adj[j]) {
    if (blocked[k] || visited[k]) continue;
    visited[k] = 1;
    if (owner[k] < 0 || augment(owner[k], adj, owner, visited, blocked)) {
      owner[k] = j;
      return true;
    }
  }
  return false;
}

bool can_match(std::size_t from, const std::vector<std::vector<int>>& adj,
               const std::vector<char>& blocked) {
  std::vector<int> owner(blocked.size(), -1);
  for (std::size_t j = from; j < adj.size(); ++j) {
    std::vector<char> visited(blocked.size(), 0);
    if (!augment(static_cast<int>(j), adj, owner, visited, blocked)) return false;
  }
  return true;
}

}  // namespace

int Network::find_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  const auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(u, v));
  if (it == edges.end() || *it != std::make_pair(u, v)) return -1;
  return static_cast<int>(it - edges.begin());
}

void compute_cycles(Network& net) {
  const std::size_t n = net.n_nodes();
  std::sort(net.edges.begin(), net.edges.end());
  net.incident.assign(n, {});
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    net.incident[net.edges[e].first].push_back(static_cast<int>(e));
    net.incident[net.edges[e].second].push_back(static_cast<int>(e));
  }
  // Depth-first spanning tree from node 0, neighbours in edge order.
  std::vector<int> parent(n, -1), parent_edge(n, -1), depth(n, -1);
  std::vector<char> tree_edge(net.edges.size(), 0);
  if (n > 0) {
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    depth[0] = 0;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next == net.incident[u].size()) {
        stack.pop_back();
        continue;
      }
      const int e = net.incident[u][next++];
      const int v = net.other(e, u);
      if (depth[v] >= 0) continue;
      depth[v] = depth[u] + 1;
      parent[v] = u;
      parent_edge[v] = e;
      tree_edge[e] = 1;
      stack.push_back({v, 0});
    }
    for (std::size_t v = 0; v < n; ++v)
      if (depth[v] < 0) throw InternalError("network is not connected");
  }

  net.loops.clear();
  net.loop_chord.clear();
  net.on_loop.assign(net.edges.size(), 0);
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (tree_edge[e]) continue;
    int a = net.edges[e].first, b = net.edges[e].second;
    std::vector<int> cyc{static_cast<int>(e)};
    while (a != b) {
      if (depth[a] >= depth[b]) {
        cyc.push_back(parent_edge[a]);
        a = parent[a];
      } else {
        cyc.push_back(parent_edge[b]);
        b = parent[b];
      }
    }
    std::sort(cyc.begin(), cyc.end());
    for (int x : cyc) net.on_loop[x] = 1;
    net.loops.push_back(std::move(cyc));
    net.loop_chord.push_back(static_cast<int>(e));
  }
}

Network network_from_edges(std::size_t n_nodes, const std::vector<std::pair<int, int>>& edges,
                           const std::vector<int>& counts) {
  Network net;
  net.sequences.assign(n_nodes, std::string());
  net.counts = counts;
  net.counts.resize(n_nodes, 0);
  net.n_observed = n_nodes;
  std::set<std::pair<int, int>> uniq;
  for (auto [u, v] : edges) {
    if (u == v || u < 0 || v < 0 || static_cast<std::size_t>(std::max(u, v)) >= n_nodes)
      throw ConfigError("invalid edge");
    uniq.insert({std::min(u, v), std::max(u, v)});
  }
  net.edges.assign(uniq.begin(), uniq.end());
  compute_cycles(net);
  return net;
}

Network build_network(const HaplotypeData& h, const NetworkOptions& opts) {
  return build_network(h.haplotypes, h.counts, opts);
}

Network build_network(const std::vector<std::string>& haplotypes, const std::vector<int>& counts,
                      const NetworkOptions& opts) {
  if (haplotypes.empty()) throw ConfigError("no haplotypes");
  if (opts.ds < 0 || opts.ds > 20) throw ConfigError("ds must lie in [0, 20]");
  Network net;
  net.sequences = haplotypes;
  net.counts = counts;
  net.counts.resize(haplotypes.size(), 0);
  net.n_observed = haplotypes.size();
  std::unordered_map<std::string, int> node_of;
  for (std::size_t i = 0; i < haplotypes.size(); ++i) {
    if (!node_of.emplace(haplotypes[i], static_cast<int>(i)).second)
      throw ConfigError("duplicate haplotype rows");
  }

  // Each pair of observed haplotypes is compared against the level at which
  // single linkage first joins them. Distance-1 components are already joined;
  // any other pair within (merge level + ds) gets every intermediate on its
  // shortest mutation paths.
  const std::size_t n = haplotypes.size();
  std::vector<std::size_t> dist(n * n, 0);
  std::vector<std::tuple<std::size_t, int, int>> pairs;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const std::size_t d = distance(haplotypes[u], haplotypes[v]);
      dist[u * n + v] = dist[v * n + u] = d;
      pairs.emplace_back(d, static_cast<int>(u), static_cast<int>(v));
    }
  std::sort(pairs.begin(), pairs.end());
  std::vector<std::vector<std::pair<int, std::size_t>>> mst(n);
  {
    UnionFind uf(n);
    for (const auto& [d, u, v] : pairs)
      if (uf.unite(u, v)) {
        mst[u].push_back({v, d});
        mst[v].push_back({u, d});
      }
  }
  // merge[u*n+v]: largest distance on the spanning-tree path between u and v
  std::vector<std::size_t> merge(n * n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<int> stack{static_cast<int>(s)};
    std::vector<char> seen(n, 0);
    seen[s] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (auto [v, d] : mst[u]) {
        if (seen[v]) continue;
        seen[v] = 1;
        merge[s * n + v] = std::max(merge[s * n + u], d);
        stack.push_back(v);
      }
    }
  }

  for (const auto& [d, u, v] : pairs) {
    const std::size_t level = merge[u * n + v];
    if (level <= 1 || d > level + static_cast<std::size_t>(opts.ds)) continue;
    const std::string& a = haplotypes[u];
    const std::string& b = haplotypes[v];
    std::vector<std::size_t> diff;
    for (std::size_t s = 0; s < a.size(); ++s)
      if (a[s] != b[s]) diff.push_back(s);
    if (diff.size() >= 31 || (std::size_t{1} << diff.size()) - 2 > opts.node_budget)
      throw SaturationError("pair of haplotypes " + std::to_string(d) +
                            " mutations apart would exceed the intermediate-node budget; "
                            "reduce ds");
    const std::uint64_t full = (std::uint64_t{1} << diff.size()) - 1;
    for (std::uint64_t mask = 1; mask < full; ++mask) {
      std::string hybrid = a;
      for (std::size_t k = 0; k < diff.size(); ++k)
        if (mask >> k & 1) hybrid[diff[k]] = b[diff[k]];
      if (node_of.count(hybrid)) continue;
      if (net.sequences.size() - net.n_observed >= opts.node_budget)
        throw SaturationError("intermediate-node budget of " + std::to_string(opts.node_budget) +
                              " exhausted (mutational saturation or excessive homoplasy); "
                              "reduce ds");
      node_of.emplace(hybrid, static_cast<int>(net.sequences.size()));
      net.sequences.push_back(std::move(hybrid));
      net.counts.push_back(0);
    }
  }

  std::set<std::pair<int, int>> edge_set;
  for (std::size_t v = 1; v < net.sequences.size(); ++v)
    for (std::size_t u = 0; u < v; ++u)
      if (distance(net.sequences[u], net.sequences[v]) == 1)
        edge_set.insert({static_cast<int>(u), static_cast<int>(v)});

  net.edges.assign(edge_set.begin(), edge_set.end());
  compute_cycles(net);
  return net;
}

std::vector<char> tree_mask(const Network& net, const std::vector<int>& deleted) {
  std::vector<char> mask(net.n_edges(), 1);
  for (int e : deleted) mask[e] = 0;
  return mask;
}

bool is_spanning_tree(const Network& net, const std::vector<int>& deleted) {
  if (deleted.size() != net.n_loop()) return false;
  std::vector<char> removed(net.n_edges(), 0);
  for (int e : deleted) {
    if (e < 0 || static_cast<std::size_t>(e) >= net.n_edges() || removed[e]) return false;
    removed[e] = 1;
  }
  return connected_without(net, removed);
}

std::vector<int> canonical_deleted(const Network& net, std::vector<int> set) {
  std::sort(set.begin(), set.end());
  const std::size_t L = net.n_loop();
  if (set.size() != L) throw InternalError("deleted set has the wrong size");
  std::vector<std::vector<int>> adj(L);
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t k = 0; k < L; ++k)
      if (std::binary_search(net.loops[j].begin(), net.loops[j].end(), set[k]))
        adj[j].push_back(static_cast<int>(k));
  std::vector<int> out(L);
  std::vector<char> blocked(L, 0);
  for (std::size_t j = 0; j < L; ++j) {
    bool placed = false;
    for (int k : adj[j]) {
      if (blocked[k]) continue;
      blocked[k] = 1;
      if (can_match(j + 1, adj, blocked)) {
        out[j] = set[k];
        placed = true;
        break;
      }
      blocked[k] = 0;
    }
    if (!placed) throw InternalError("deleted edges do not break every loop");
  }
  return out;
}

std::vector<int> default_deleted(const Network& net) { return net.loop_chord; }

std::vector<int> tree_cycle(const Network& net, const std::vector<char>& mask, int edge) {
  const int src = net.edges[edge].first, dst = net.edges[edge].second;
  std::vector<int> via(net.n_nodes(), -2);
  std::queue<int> q;
  q.push(src);
  via[src] = -1;
  while (!q.empty() && via[dst] == -2) {
    const int u = q.front();
    q.pop();
    for (int e : net.incident[u]) {
      if (!mask[e] || e == edge) continue;
      const int v = net.other(e, u);
      if (via[v] != -2) continue;
      via[v] = e;
      q.push(v);
    }
  }
  if (via[dst] == -2) throw InternalError("edge endpoints are not joined by the tree");
  std::vector<int> cyc{edge};
  for (int v = dst; v != src;) {
    const int e = via[v];
    cyc.push_back(e);
    v = net.other(e, v);
  }
  std::sort(cyc.begin(), cyc.end());
  return cyc;
}

EnumerationResult enumerate_trees(const Network& net, std::size_t cap,
                                  const std::function<void(const std::vector<int>&)>& visit) {
  EnumerationResult res;
  if (net.n_loop() > cap) {
    res.available = false;
    return res;
  }
  std::vector<int> candidates;
  for (std::size_t e = 0; e < net.n_edges(); ++e)
    if (net.on_loop[e]) candidates.push_back(static_cast<int>(e));
  const std::size_t need = net.n_loop();
  std::vector<char> removed(net.n_edges(), 0);
  std::vector<int> chosen;

  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (chosen.size() == need) {
      ++res.count;
      if (visit) visit(canonical_deleted(net, chosen));
      return;
    }
    if (candidates.size() - i < need - chosen.size()) return;
    const int e = candidates[i];
    removed[e] = 1;
    if (connected_without(net, removed)) {
      chosen.push_back(e);
      rec(i + 1);
      chosen.pop_back();
    }
    removed[e] = 0;
    rec(i + 1);
  };
  rec(0);
  return res;
}

void TreeHashTable::record(const std::vector<int>& deleted, std::uint64_t times) {
  entries_[deleted] += times;
  total_ += times;
}

void TreeHashTable::merge(const TreeHashTable& other) {
  for (const auto& [k, v] : other.entries_) record(k, v);
}

std::uint64_t TreeHashTable::count(const std::vector<int>& deleted) const {
  const auto it = entries_.find(deleted);
  return it == entries_.end() ? 0 : it->second;
}

std::vector<int> TreeHashTable::mode() const {
  const std::vector<int>* best = nullptr;
  std::uint64_t best_count = 0;
  for (const auto& [k, v] : entries_) {
    if (v > best_count) {
      best = &k;
      best_count = v;
    }
  }
  return best ? *best : std::vector<int>{};
}

std::vector<double> edge_posterior(const std::vector<std::vector<int>>& samples, const Network& net) {
  std::vector<double> out(net.n_edges(), 0.0);
  if (samples.empty()) return out;
  std::vector<std::size_t> absent(net.n_edges(), 0);
  for (const auto& d : samples)
    for (int e : d) ++absent[e];
  const double total = static_cast<double>(samples.size());
  for (std::size_t e = 0; e < net.n_edges(); ++e)
    out[e] = absent[e] == 0 ? 1.0 : (total - static_cast<double>(absent[e])) / total;
  return out;
}

RootedTree orient(const Network& net, const std::vector<char>& mask, int root) {
  const std::size_t n = net.n_nodes();
  RootedTree t;
  t.root = root;
  t.parent.assign(n, -1);
  t.parent_edge.assign(n, -1);
  t.children.assign(n, {});
  t.depth.assign(n, -1);
  t.order.reserve(n);
  t.order.push_back(root);
  t.depth[root] = 0;
  for (std::size_t i = 0; i < t.order.size(); ++i) {
    const int u = t.order[i];
    for (int e : net.incident[u]) {
      if (!mask[e]) continue;
      const int v = net.other(e, u);
      if (t.depth[v] >= 0) continue;
      t.depth[v] = t.depth[u] + 1;
      t.parent[v] = u;
      t.parent_edge[v] = e;
      t.children[u].push_back(v);
      t.order.push_back(v);
    }
  }
  if (t.order.size() != n) throw InternalError("tree does not span the network");
  return t;
}

std::string network_json(const Network& net) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < net.n_nodes(); ++i) {
    nlohmann::ordered_json node;
    node["id"] = i;
    node["observed"] = i < net.n_observed;
    node["count"] = net.counts[i];
    node["sequence"] = net.sequences[i];
    j["nodes"].push_back(node);
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < net.n_edges(); ++e) {
    nlohmann::ordered_json edge;
    edge["id"] = e;
    edge["from"] = net.edges[e].first;
    edge["to"] = net.edges[e].second;
    std::vector<int> member;
    for (std::size_t l = 0; l < net.n_loop(); ++l)
      if (std::binary_search(net.loops[l].begin(), net.loops[l].end(), static_cast<int>(e)))
        member.push_back(static_cast<int>(l));
    edge["loops"] = member;
    j["edges"].push_back(edge);
  }
  j["loops"] = net.loops;
  return j.dump(2) + "\n";
}

std::string network_edge_list(const Network& net) {
  std::ostringstream os;
  for (auto [u, v] : net.edges) os << u << ' ' << v << '\n';
  return os.str();
}

}  // namespace geoclade
