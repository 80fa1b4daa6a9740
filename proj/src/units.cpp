#include "geoclade/units.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "geoclade/errors.hpp"

namespace geoclade {

std::vector<std::vector<std::int32_t>> node_rows(const std::vector<int>& obs_hap,
                                                 std::size_t n_nodes) {
  std::vector<std::vector<std::int32_t>> out(n_nodes);
  for (std::size_t i = 0; i < obs_hap.size(); ++i) out[obs_hap[i]].push_back(static_cast<std::int32_t>(i));
  return out;
}

UnitTree build_units(const Network& net, const std::vector<char>& mask, const std::vector<int>& m,
                     const std::vector<std::vector<std::int32_t>>& rows_of_node,
                     std::size_t n_rows) {
  UnitTree u;
  const std::size_t n = net.n_nodes();
  u.hub_of.assign(n, -1);
  std::map<int, int> mult;
  for (int h : m) ++mult[h];
  for (auto [h, k] : mult) {
    u.hub_of[h] = static_cast<int>(u.hub_node.size());
    u.hub_node.push_back(h);
    u.cap.push_back(k + 1);
  }
  u.hub_units.assign(u.hub_node.size(), {});
  u.node_unit.assign(n, -1);
  u.row_unit.assign(n_rows, -1);

  auto add_unit = [&](UnitKind kind, int node, int edge) {
    u.kind.push_back(kind);
    u.unit_hubs.emplace_back();
    u.unit_rows.emplace_back();
    u.unit_node.push_back(node);
    u.unit_edge.push_back(edge);
    return static_cast<int>(u.kind.size() - 1);
  };
  auto attach = [&](int unit, int hub) {
    u.unit_hubs[unit].push_back(hub);
    u.hub_units[hub].push_back(unit);
  };

  // Clades in order of their smallest node.
  for (std::size_t s = 0; s < n; ++s) {
    if (u.hub_of[s] >= 0 || u.node_unit[s] >= 0) continue;
    const int unit = add_unit(UnitKind::Clade, static_cast<int>(s), -1);
    std::vector<int> stack{static_cast<int>(s)}, members;
    u.node_unit[s] = unit;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      members.push_back(x);
      for (int e : net.incident[x]) {
        if (!mask[e]) continue;
        const int y = net.other(e, x);
        if (u.hub_of[y] >= 0) {
          attach(unit, u.hub_of[y]);
        } else if (u.node_unit[y] < 0) {
          u.node_unit[y] = unit;
          stack.push_back(y);
        }
      }
    }
    std::sort(members.begin(), members.end());
    for (int x : members)
      for (std::int32_t r : rows_of_node[x]) u.unit_rows[unit].push_back(r);
    std::sort(u.unit_rows[unit].begin(), u.unit_rows[unit].end());
  }
  for (std::size_t h = 0; h < u.hub_node.size(); ++h) {
    for (std::int32_t r : rows_of_node[u.hub_node[h]]) {
      const int unit = add_unit(UnitKind::Observation, u.hub_node[h], -1);
      u.unit_rows[unit].push_back(r);
      attach(unit, static_cast<int>(h));
    }
  }
  for (std::size_t e = 0; e < net.n_edges(); ++e) {
    if (!mask[e]) continue;
    const int a = u.hub_of[net.edges[e].first], b = u.hub_of[net.edges[e].second];
    if (a < 0 || b < 0) continue;
    const int unit = add_unit(UnitKind::Edge, -1, static_cast<int>(e));
    attach(unit, a);
    attach(unit, b);
  }
  for (std::size_t unit = 0; unit < u.size(); ++unit)
    for (std::int32_t r : u.unit_rows[unit]) u.row_unit[r] = static_cast<int>(unit);
  return u;
}

namespace {

int distinct_at_hub(const UnitTree& u, const std::vector<int>& labels, int hub) {
  std::vector<int> seen;
  for (int unit : u.hub_units[hub]) {
    const int l = labels[unit];
    if (std::find(seen.begin(), seen.end(), l) == seen.end()) seen.push_back(l);
  }
  return static_cast<int>(seen.size());
}

double log_falling(int cap, int g) { return std::lgamma(cap + 1.0) - std::lgamma(cap - g + 1.0); }

}  // namespace

bool labels_valid(const UnitTree& u, const std::vector<int>& labels, int K) {
  if (labels.size() != u.size()) return false;
  std::vector<char> used(K + 1, 0);
  int distinct = 0;
  for (int l : labels) {
    if (l < 0 || l > K) return false;
    if (!used[l]) {
      used[l] = 1;
      ++distinct;
    }
  }
  int components = 1;
  for (std::size_t h = 0; h < u.n_hubs(); ++h) {
    const int g = distinct_at_hub(u, labels, static_cast<int>(h));
    if (g > u.cap[h]) return false;
    components += g - 1;
  }
  return distinct == components;
}

double log_allocation_prior(const UnitTree& u, const std::vector<int>& labels, int K) {
  if (!labels_valid(u, labels, K)) return -std::numeric_limits<double>::infinity();
  double lp = 0.0;
  int clusters = 1;
  for (std::size_t h = 0; h < u.n_hubs(); ++h) {
    const int g = distinct_at_hub(u, labels, static_cast<int>(h));
    const auto attached = static_cast<double>(u.hub_units[h].size());
    lp += log_falling(u.cap[h], g) - attached * std::log(static_cast<double>(u.cap[h]));
    clusters += g - 1;
  }
  return lp + std::lgamma(K + 2.0 - clusters) - std::lgamma(K + 2.0);
}

std::vector<int> observation_labels(const UnitTree& u, const std::vector<int>& labels) {
  std::vector<int> c(u.row_unit.size());
  for (std::size_t r = 0; r < c.size(); ++r) c[r] = labels[u.row_unit[r]];
  return c;
}

std::vector<int> node_labels(const UnitTree& u, const std::vector<int>& labels,
                             std::size_t n_nodes) {
  std::vector<int> out(n_nodes, -1);
  for (std::size_t x = 0; x < n_nodes; ++x)
    if (u.node_unit[x] >= 0) out[x] = labels[u.node_unit[x]];
  for (std::size_t h = 0; h < u.n_hubs(); ++h) {
    for (int unit : u.hub_units[h]) {
      if (u.kind[unit] == UnitKind::Observation) {
        out[u.hub_node[h]] = labels[unit];
        break;
      }
    }
    if (out[u.hub_node[h]] < 0 && !u.hub_units[h].empty())
      out[u.hub_node[h]] = labels[u.hub_units[h].front()];
  }
  return out;
}

bool is_valid_clustering(const std::vector<int>& c, const std::vector<int>& m, int K,
                         const Network& net, const std::vector<char>& mask,
                         const std::vector<int>& obs_hap) {
  if (static_cast<int>(m.size()) != K || c.size() != obs_hap.size()) return false;
  const UnitTree u = build_units(net, mask, m, node_rows(obs_hap, net.n_nodes()), c.size());
  const int nu = static_cast<int>(u.size());
  const int nh = static_cast<int>(u.n_hubs());
  std::vector<int> fixed(nu, -1);
  for (int unit = 0; unit < nu; ++unit) {
    for (std::int32_t r : u.unit_rows[unit]) {
      const int l = c[r];
      if (l < 0 || l > K) return false;
      if (fixed[unit] >= 0 && fixed[unit] != l) return false;
      fixed[unit] = l;
    }
  }

  // Bipartite adjacency: units 0..nu-1, hubs nu..nu+nh-1.
  std::vector<std::vector<int>> adj(nu + nh);
  for (int unit = 0; unit < nu; ++unit)
    for (int h : u.unit_hubs[unit]) {
      adj[unit].push_back(nu + h);
      adj[nu + h].push_back(unit);
    }

  // Every unit on the subtree spanning a label's units must carry that label.
  std::vector<int> terminals_label = fixed;
  for (int l = 0; l <= K; ++l) {
    std::vector<char> terminal(nu + nh, 0);
    int count = 0;
    for (int unit = 0; unit < nu; ++unit)
      if (terminals_label[unit] == l) {
        terminal[unit] = 1;
        ++count;
      }
    if (count < 2) continue;
    std::vector<int> degree(nu + nh);
    std::vector<char> alive(nu + nh, 1);
    std::vector<int> leaves;
    for (int x = 0; x < nu + nh; ++x) {
      degree[x] = static_cast<int>(adj[x].size());
      if (degree[x] <= 1 && !terminal[x]) leaves.push_back(x);
    }
    while (!leaves.empty()) {
      const int x = leaves.back();
      leaves.pop_back();
      if (!alive[x]) continue;
      alive[x] = 0;
      for (int y : adj[x]) {
        if (!alive[y]) continue;
        if (--degree[y] <= 1 && !terminal[y]) leaves.push_back(y);
      }
    }
    for (int unit = 0; unit < nu; ++unit) {
      if (!alive[unit]) continue;
      if (fixed[unit] >= 0 && fixed[unit] != l) return false;
      fixed[unit] = l;
    }
  }

  std::vector<int> free_units;
  {
    std::vector<char> seen(nu + nh, 0);
    std::vector<int> queue{0};
    seen[0] = 1;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      const int x = queue[i];
      if (x < nu && fixed[x] < 0) free_units.push_back(x);
      for (int y : adj[x])
        if (!seen[y]) {
          seen[y] = 1;
          queue.push_back(y);
        }
    }
  }
  std::vector<int> labels = fixed;
  auto hub_ok = [&](int h) {
    std::vector<int> seen;
    for (int unit : u.hub_units[h]) {
      const int l = labels[unit];
      if (l >= 0 && std::find(seen.begin(), seen.end(), l) == seen.end()) seen.push_back(l);
    }
    return static_cast<int>(seen.size()) <= u.cap[h];
  };
  for (int h = 0; h < nh; ++h)
    if (!hub_ok(h)) return false;

  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == free_units.size()) return labels_valid(u, labels, K);
    const int unit = free_units[i];
    std::vector<int> cand;
    for (int h : u.unit_hubs[unit])
      for (int other : u.hub_units[h]) {
        const int l = labels[other];
        if (l >= 0 && std::find(cand.begin(), cand.end(), l) == cand.end()) cand.push_back(l);
      }
    std::vector<char> used(K + 1, 0);
    for (int l : labels)
      if (l >= 0) used[l] = 1;
    for (int l = 0; l <= K; ++l)
      if (!used[l]) {
        cand.push_back(l);
        break;
      }
    for (int l : cand) {
      labels[unit] = l;
      bool ok = true;
      for (int h : u.unit_hubs[unit]) ok = ok && hub_ok(h);
      if (ok && rec(i + 1)) return true;
    }
    labels[unit] = -1;
    return false;
  };
  return rec(0);
}

std::vector<int> carry_labels(const UnitTree& u, const UnitTree& old,
                              const std::vector<int>& old_labels, std::size_t n_nodes) {
  const std::vector<int> old_rows = observation_labels(old, old_labels);
  const std::vector<int> old_nodes = node_labels(old, old_labels, n_nodes);
  std::map<int, int> old_edge;
  for (std::size_t unit = 0; unit < old.size(); ++unit)
    if (old.kind[unit] == UnitKind::Edge) old_edge[old.unit_edge[unit]] = old_labels[unit];
  std::vector<int> prev(u.size(), -1);
  for (std::size_t unit = 0; unit < u.size(); ++unit) {
    if (!u.unit_rows[unit].empty()) {
      prev[unit] = old_rows[u.unit_rows[unit].front()];
    } else if (u.kind[unit] == UnitKind::Clade) {
      prev[unit] = old_nodes[u.unit_node[unit]];
    } else if (u.kind[unit] == UnitKind::Edge) {
      const auto it = old_edge.find(u.unit_edge[unit]);
      if (it != old_edge.end()) prev[unit] = it->second;
    }
  }
  return prev;
}

namespace {

struct Running {
  double n = 0.0;
  std::vector<double> sum, sumsq;
  double cross = 0.0;
};

class Allocator {
 public:
  Allocator(const AllocationContext& ctx, const std::vector<int>& previous)
      : ctx_(ctx), prev_(previous), labels_(ctx.units.size(), -1),
        hub_labels_(ctx.units.n_hubs()), used_(ctx.K + 1, 0), running_(ctx.K + 1) {
    for (auto& r : running_) {
      r.sum.assign(ctx.y.dims, 0.0);
      r.sumsq.assign(ctx.y.dims, 0.0);
    }
    const double g = ctx.gamma;
    prior_block_ = ctx.cfg.psi / std::max(g - 3.0, 1.0);
    prior_diag_ = ctx.cfg.psi / std::max(g - 1.0, 1.0);
  }

  // `target` empty: sample; otherwise evaluate the probability of `target`.
  double run(std::mt19937_64& rng, const std::vector<int>* target) {
    const UnitTree& u = ctx_.units;
    double log_q = 0.0;
    std::vector<std::pair<int, int>> available;  // (unit, parent hub)
    const int root = std::uniform_int_distribution<int>(0, static_cast<int>(u.size()) - 1)(rng);
    available.push_back({root, -1});
    while (!available.empty()) {
      const int pick = available.size() == 1
                           ? 0
                           : std::uniform_int_distribution<int>(
                                 0, static_cast<int>(available.size()) - 1)(rng);
      const auto [unit, parent] = available[pick];
      available[pick] = available.back();
      available.pop_back();

      const int label = choose(unit, parent, rng, target, log_q);
      if (label < 0) return -std::numeric_limits<double>::infinity();
      assign(unit, label);
      for (int h : u.unit_hubs[unit]) {
        if (h == parent) continue;
        for (int other : u.hub_units[h])
          if (other != unit) available.push_back({other, h});
      }
    }
    return log_q;
  }

  const std::vector<int>& labels() const { return labels_; }

 private:
  Cluster predictive(int label) const {
    const Running& r = running_[label];
    const int dims = ctx_.y.dims;
    const double g = ctx_.gamma;
    Cluster k;
    k.mu.resize(dims);
    for (int j = 0; j < dims; ++j) k.mu[j] = r.sum[j] / (r.n + 1.0);
    const double denom = g + r.n;
    k.block.a = (g * prior_block_ + r.sumsq[0] - (r.n + 1.0) * k.mu[0] * k.mu[0]) / denom;
    k.block.c = (g * prior_block_ + r.sumsq[1] - (r.n + 1.0) * k.mu[1] * k.mu[1]) / denom;
    k.block.b = (r.cross - (r.n + 1.0) * k.mu[0] * k.mu[1]) / denom;
    const double floor = 1e-9;
    k.block.a = std::max(k.block.a, floor);
    k.block.c = std::max(k.block.c, floor);
    const double lim = 0.999 * std::sqrt(k.block.a * k.block.c);
    k.block.b = std::clamp(k.block.b, -lim, lim);
    for (int j = 2; j < dims; ++j)
      k.diag.push_back(std::max(
          floor, (g * prior_diag_ + r.sumsq[j] - (r.n + 1.0) * k.mu[j] * k.mu[j]) / denom));
    return k;
  }

  double fit(int unit, int label) const {
    const auto& rows = ctx_.units.unit_rows[unit];
    if (rows.empty() || ctx_.cfg.tau == 0.0) return 0.0;
    return ctx_.cfg.tau * cluster_log_likelihood(ctx_.y, rows, predictive(label));
  }

  int choose(int unit, int parent, std::mt19937_64& rng, const std::vector<int>* target,
             double& log_q) {
    const UnitTree& u = ctx_.units;
    const int K = ctx_.K;
    const std::vector<int> present = parent >= 0 ? hub_labels_[parent] : std::vector<int>{};
    std::vector<int> unused;
    for (int l = 0; l <= K; ++l)
      if (!used_[l]) unused.push_back(l);
    const bool fresh =
        !unused.empty() &&
        (parent < 0 || static_cast<int>(hub_labels_[parent].size()) < u.cap[parent]);

    // Options: each present label, then one fresh option.
    std::vector<double> score;
    for (int l : present) score.push_back(fit(unit, l));
    if (fresh) {
      // An unused label's running cluster is still at its prior state.
      score.push_back(fit(unit, unused.front()));
    }
    if (score.empty()) throw InternalError("no admissible cluster for a unit");
    const double top = *std::max_element(score.begin(), score.end());
    double z = 0.0;
    for (double& s : score) z += (s = std::exp(s - top));
    for (double& s : score) s /= z;

    auto fit_prob = [&](int l) {
      for (std::size_t i = 0; i < present.size(); ++i)
        if (present[i] == l) return score[i];
      if (fresh && !used_[l]) return score.back() / static_cast<double>(unused.size());
      return 0.0;
    };
    const int prev = prev_.empty() ? -1 : prev_[unit];
    bool admissible = prev >= 0 && prev <= K &&
                      (std::find(present.begin(), present.end(), prev) != present.end() ||
                       (fresh && !used_[prev]));
    const double w = admissible ? ctx_.w : 0.0;

    int label;
    if (target) {
      label = (*target)[unit];
    } else if (admissible && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < w) {
      label = prev;
    } else {
      std::discrete_distribution<int> pick(score.begin(), score.end());
      const int opt = pick(rng);
      if (opt < static_cast<int>(present.size())) {
        label = present[opt];
      } else {
        label = unused[std::uniform_int_distribution<int>(0, static_cast<int>(unused.size()) - 1)(rng)];
      }
    }
    const double p = (label == prev ? w : 0.0) + (1.0 - w) * fit_prob(label);
    if (!(p > 0.0)) return -1;
    log_q += std::log(p);
    return label;
  }

  void assign(int unit, int label) {
    const UnitTree& u = ctx_.units;
    labels_[unit] = label;
    used_[label] = 1;
    for (int h : u.unit_hubs[unit]) {
      auto& hl = hub_labels_[h];
      if (std::find(hl.begin(), hl.end(), label) == hl.end()) hl.push_back(label);
    }
    Running& r = running_[label];
    const auto view = ctx_.y.view();
    for (std::int32_t row : u.unit_rows[unit]) {
      r.n += 1.0;
      for (int j = 0; j < ctx_.y.dims; ++j) {
        const double v = view.column(j)[row];
        r.sum[j] += v;
        r.sumsq[j] += v * v;
      }
      r.cross += view.column(0)[row] * view.column(1)[row];
    }
  }

  const AllocationContext& ctx_;
  const std::vector<int>& prev_;
  std::vector<int> labels_;
  std::vector<std::vector<int>> hub_labels_;
  std::vector<char> used_;
  std::vector<Running> running_;
  double prior_block_ = 1.0, prior_diag_ = 1.0;
};

}  // namespace

Allocation propose_allocation(const AllocationContext& ctx, const std::vector<int>& previous,
                              std::mt19937_64& rng) {
  Allocator a(ctx, previous);
  Allocation out;
  out.log_q = a.run(rng, nullptr);
  out.labels = a.labels();
  return out;
}

double replay_allocation(const AllocationContext& ctx, const std::vector<int>& labels,
                         const std::vector<int>& previous, std::mt19937_64& rng) {
  if (labels.size() != ctx.units.size()) return -std::numeric_limits<double>::infinity();
  Allocator a(ctx, previous);
  return a.run(rng, &labels);
}

}  // namespace geoclade
