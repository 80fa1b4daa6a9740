#include "geoclade/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include "geoclade/errors.hpp"
#include "json.hpp"

namespace geoclade {

namespace {

int n_labels(const PosteriorArchive& a) { return a.config.max_mig + 1; }

// Observed node nearest to each node in one tree, ties to the earliest source.
std::vector<int> nearest_source(const Network& net, const std::vector<char>& mask) {
  const std::size_t n = net.n_nodes();
  std::vector<int> src(n, -1);
  std::deque<int> q;
  for (std::size_t v = 0; v < n; ++v)
    if (net.counts[v] > 0) {
      src[v] = static_cast<int>(v);
      q.push_back(static_cast<int>(v));
    }
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    for (int e : net.incident[v]) {
      if (!mask[e]) continue;
      const int w = net.other(e, v);
      if (src[w] >= 0) continue;
      src[w] = src[v];
      q.push_back(w);
    }
  }
  return src;
}

}  // namespace

std::vector<int> nearest_observed(const Network& net, const std::vector<char>& mask, int root) {
  if (net.counts[root] > 0) return {root};
  std::vector<int> frontier{root}, found;
  std::vector<char> seen(net.n_nodes(), 0);
  seen[root] = 1;
  while (!frontier.empty() && found.empty()) {
    std::vector<int> next;
    for (int v : frontier)
      for (int e : net.incident[v]) {
        if (!mask[e]) continue;
        const int w = net.other(e, v);
        if (seen[w]) continue;
        seen[w] = 1;
        if (net.counts[w] > 0) found.push_back(w);
        else next.push_back(w);
      }
    frontier = std::move(next);
  }
  std::sort(found.begin(), found.end());
  return found;
}

std::vector<double> ancestral_locations(const SummaryInputs& in) {
  const auto& draws = in.archive.draws;
  std::vector<double> p(in.obs.n_locations(), 0.0);
  if (draws.empty()) return p;
  const auto rows = node_rows(in.obs_hap, in.net.n_nodes());
  for (const Draw& d : draws) {
    const auto mask = tree_mask(in.net, d.deleted);
    const auto heirs = nearest_observed(in.net, mask, d.root);
    for (int h : heirs) {
      const double share = 1.0 / (heirs.size() * rows[h].size());
      for (auto r : rows[h]) p[in.obs.location[r]] += share;
    }
  }
  for (double& x : p) x /= static_cast<double>(draws.size());
  return p;
}

SummaryReport summarize(const SummaryInputs& in) {
  const PosteriorArchive& a = in.archive;
  if (a.draws.empty()) throw ConfigError("the archive holds no draws");
  const Network& net = in.net;
  const std::size_t nodes = net.n_nodes();
  const int labels = n_labels(a);
  const double nd = static_cast<double>(a.draws.size());
  const auto rows = node_rows(in.obs_hap, nodes);

  SummaryReport r;
  r.root_probs.assign(nodes, 0.0);
  r.mig_probs.assign(labels, 0.0);
  r.cluster_probs.assign(nodes, std::vector<double>(labels, 0.0));
  std::vector<std::vector<int>> deleted;
  deleted.reserve(a.draws.size());

  for (const Draw& d : a.draws) {
    r.root_probs[d.root] += 1.0 / nd;
    r.mig_probs[d.effective_migrations()] += 1.0 / nd;
    deleted.push_back(d.deleted);
    const auto mask = tree_mask(net, d.deleted);
    const auto src = nearest_source(net, mask);
    for (std::size_t v = 0; v < nodes; ++v) {
      const auto& own = rows[src[v]];
      for (auto row : own) r.cluster_probs[v][d.aligned_label(row)] += 1.0 / (nd * own.size());
    }
  }
  r.map_effective = static_cast<int>(
      std::max_element(r.mig_probs.begin(), r.mig_probs.end()) - r.mig_probs.begin());
  r.edge_probs = edge_posterior(deleted, net);

  r.root_loc_probs = ancestral_locations(in);
  std::vector<int> order(r.root_loc_probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return r.root_loc_probs[x] > r.root_loc_probs[y]; });
  order.resize(std::min<std::size_t>(3, order.size()));
  r.top_locations = order;

  r.map_deleted = a.trees.total() ? a.trees.mode() : a.draws.front().deleted;
  r.map_root = static_cast<int>(
      std::max_element(r.root_probs.begin(), r.root_probs.end()) - r.root_probs.begin());
  const auto mask = tree_mask(net, r.map_deleted);
  for (std::size_t e = 0; e < net.n_edges(); ++e)
    if (mask[e]) r.map_edges.push_back(net.edges[e]);
  r.levels = orient(net, mask, r.map_root).depth;

  const int chains = static_cast<int>(a.chains.size());
  const int dims = in.y.dims;
  r.chain_means.assign(chains, std::vector<std::vector<double>>(labels));
  std::vector<std::vector<long>> seen(chains, std::vector<long>(labels, 0));
  for (const Draw& d : a.draws) {
    std::set<int> used(d.c.begin(), d.c.end());
    for (int raw : used) {
      const int lab = d.perm[raw];
      auto& m = r.chain_means[d.chain][lab];
      if (m.empty()) m.assign(dims, 0.0);
      for (int j = 0; j < dims; ++j) m[j] += d.clusters[raw].mu[j];
      ++seen[d.chain][lab];
    }
  }
  for (int c = 0; c < chains; ++c)
    for (int l = 0; l < labels; ++l)
      for (int j = 0; j < static_cast<int>(r.chain_means[c][l].size()); ++j)
        r.chain_means[c][l][j] = in.y.to_raw(j, r.chain_means[c][l][j] / seen[c][l]);

  r.root_tv = a.diagnostics.root_tv;
  r.root_converged = a.diagnostics.root_converged;
  r.cluster_converged = a.diagnostics.cluster_converged;
  return r;
}

Ellipse half_density_ellipse(double cx, double cy, const Sym2& cov) {
  // density halves at Mahalanobis radius sqrt(2 ln 2)
  const double radius = std::sqrt(2.0 * std::log(2.0));
  const double mean = 0.5 * (cov.a + cov.c);
  const double diff = 0.5 * (cov.a - cov.c);
  const double root = std::hypot(diff, cov.b);
  const double l1 = mean + root, l2 = std::max(mean - root, 0.0);
  Ellipse e;
  e.cx = cx;
  e.cy = cy;
  e.major = radius * std::sqrt(l1);
  e.minor = radius * std::sqrt(l2);
  e.angle = 0.5 * std::atan2(2.0 * cov.b, cov.a - cov.c);
  return e;
}

std::vector<std::array<double, 2>> ellipse_points(const Ellipse& e, int segments) {
  std::vector<std::array<double, 2>> pts;
  const double ca = std::cos(e.angle), sa = std::sin(e.angle);
  for (int i = 0; i <= segments; ++i) {
    const double t = 2.0 * M_PI * (i % segments) / segments;
    const double u = e.major * std::cos(t), v = e.minor * std::sin(t);
    pts.push_back({e.cx + ca * u - sa * v, e.cy + sa * u + ca * v});
  }
  return pts;
}

namespace {

Ellipse raw_ellipse(const NormalizedData& y, const std::vector<double>& mu, const Sym2& block) {
  const double s = y.geo_scale;
  return half_density_ellipse(y.to_raw(0, mu[0]), y.to_raw(1, mu[1]), block.scaled(s * s));
}

}  // namespace

ContourSet contours(const PosteriorArchive& archive, const NormalizedData& y) {
  ContourSet out;
  const int labels = n_labels(archive);
  std::vector<std::array<double, 5>> sum(labels, {0, 0, 0, 0, 0});
  std::vector<long> seen(labels, 0);
  for (std::size_t i = 0; i < archive.draws.size(); ++i) {
    const Draw& d = archive.draws[i];
    std::set<int> used(d.c.begin(), d.c.end());
    for (int raw : used) {
      const Cluster& k = d.clusters[raw];
      const int lab = d.perm[raw];
      out.draws.push_back({lab, static_cast<int>(i), 1.0, raw_ellipse(y, k.mu, k.block)});
      sum[lab][0] += k.mu[0];
      sum[lab][1] += k.mu[1];
      sum[lab][2] += k.block.a;
      sum[lab][3] += k.block.b;
      sum[lab][4] += k.block.c;
      ++seen[lab];
    }
  }
  for (int l = 0; l < labels; ++l) {
    if (!seen[l]) continue;
    const double n = static_cast<double>(seen[l]);
    const Sym2 block{sum[l][2] / n, sum[l][3] / n, sum[l][4] / n};
    out.means.push_back({l, -1, n / archive.draws.size(),
                         raw_ellipse(y, {sum[l][0] / n, sum[l][1] / n}, block)});
  }
  return out;
}

std::vector<CovariateBand> covariate_bands(const PosteriorArchive& archive, const NormalizedData& y) {
  std::vector<CovariateBand> out;
  const int labels = n_labels(archive);
  const double z = normal_quantile(0.95);
  auto median = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  };
  for (int l = 0; l < labels; ++l)
    for (int j = 2; j < y.dims; ++j) {
      std::vector<double> lo, mid, hi;
      for (const Draw& d : archive.draws) {
        const bool used = std::any_of(d.c.begin(), d.c.end(), [&](int raw) { return d.perm[raw] == l; });
        if (!used) continue;
        const Cluster& k = d.aligned_cluster(l);
        const double mu = y.to_raw(j, k.mu[j]);
        const double sd = y.cov_scale[j - 2] * std::sqrt(k.diag[j - 2]);
        lo.push_back(mu - z * sd);
        mid.push_back(mu);
        hi.push_back(mu + z * sd);
      }
      if (mid.empty()) continue;
      out.push_back({l, j - 1, median(lo), median(mid), median(hi)});
    }
  return out;
}

std::string summary_json(const SummaryReport& r, const std::vector<std::string>& node_names) {
  nlohmann::ordered_json j;
  j["nodes"] = node_names;
  j["rootProbs"] = r.root_probs;
  j["rootLocProbs"] = r.root_loc_probs;
  j["topLocations"] = r.top_locations;
  j["migProbs"] = r.mig_probs;
  j["mapEffectiveMigrations"] = r.map_effective;
  j["clusterProbs"] = r.cluster_probs;
  j["edgeTotalProbs"] = r.edge_probs;
  j["mapDeleted"] = r.map_deleted;
  auto edges = nlohmann::ordered_json::array();
  for (const auto& [u, v] : r.map_edges) edges.push_back({u, v});
  j["mapTreeEdges"] = edges;
  j["mapRoot"] = r.map_root;
  j["levels"] = r.levels;
  auto means = nlohmann::ordered_json::array();
  for (const auto& chain : r.chain_means) {
    auto per = nlohmann::ordered_json::array();
    for (const auto& m : chain) per.push_back(m.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m));
    means.push_back(per);
  }
  j["chainMeans"] = means;
  j["convergence"] = {{"rootTV", r.root_tv},
                      {"root", r.root_converged},
                      {"clustering", r.cluster_converged}};
  return j.dump(2) + "\n";
}

}  // namespace geoclade
