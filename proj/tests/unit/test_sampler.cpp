#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "geoclade/errors.hpp"
#include "geoclade/sampler.hpp"

using namespace geoclade;

namespace {

struct Toy {
  Network net;
  NormalizedData y;
  std::vector<int> obs_hap;
};

Toy toy(std::size_t n_nodes, const std::vector<std::pair<int, int>>& edges,
        const std::vector<int>& obs_hap, std::uint64_t seed) {
  Toy t;
  std::vector<int> counts(n_nodes, 0);
  for (int h : obs_hap) ++counts[h];
  t.net = network_from_edges(n_nodes, edges, counts);
  t.obs_hap = obs_hap;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < obs_hap.size(); ++i) rows.push_back({z(rng), z(rng)});
  t.y = normalize(rows);
  return t;
}

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<double> root_marginal_mcmc(const Toy& t, long iter, std::uint64_t seed) {
  RunConfig cfg;
  cfg.max_mig = 1;
  cfg.iter = iter;
  PriorConfig pr = prior_for(cfg, t.y);
  Model model(t.net, t.y, t.obs_hap, pr);
  Chain ch(model, cfg, seed, false);
  std::vector<double> visits(t.net.n_nodes(), 0.0);
  for (long it = 1; it <= iter; ++it) {
    ch.iterate(it);
    visits[ch.state().tree.root] += 1.0;
  }
  for (double& v : visits) v /= static_cast<double>(iter);
  return visits;
}

}  // namespace

TEST_CASE("configuration checks") {
  RunConfig cfg;
  cfg.iter = 100;
  cfg.post_samples = 200;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg.post_samples = 10;
  CHECK_NOTHROW(validate(cfg));
  CHECK(cfg.burn_in() == 90);
  cfg.post_samples = 50;
  CHECK(cfg.burn_in() == 50);
  cfg.dims = 1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("exact root posterior is recovered on a path and a star") {
  const auto start = std::chrono::steady_clock::now();
  const Toy path = toy(3, {{0, 1}, {1, 2}}, {0, 1, 2}, 1);
  const Toy star = toy(4, {{0, 1}, {0, 2}, {0, 3}}, {0, 1, 2, 3}, 2);
  for (const Toy* t : {&path, &star}) {
    const auto exact = root_posterior_exact(t->net).root_marginal;
    const auto mcmc = root_marginal_mcmc(*t, 100000, 17);
    MESSAGE("TV " << tv(exact, mcmc));
    CHECK(tv(exact, mcmc) < 0.03);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 120.0);
}

TEST_CASE("root and tree posterior on a network with a loop") {
  // 4-cycle with a pendant observed node; unequal counts break the symmetry.
  // The ordering-only posterior holds when clusterings carry no tree
  // information: no migrations, or no likelihood.
  const Toy t = toy(5, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {2, 4}}, {0, 0, 1, 2, 3, 3, 3, 4}, 3);
  const auto exact = root_posterior_exact(t.net);
  for (const auto& [max_mig, tau] : {std::pair{0, 1.0}, std::pair{2, 0.0}}) {
    RunConfig cfg;
    cfg.max_mig = max_mig;
    cfg.tau = tau;
    cfg.tree_every = 1;
    PriorConfig pr = prior_for(cfg, t.y);
    Model model(t.net, t.y, t.obs_hap, pr);
    Chain ch(model, cfg, 23, false);
    std::vector<double> roots(t.net.n_nodes(), 0.0), trees(exact.trees.size(), 0.0);
    const long iter = 100000;
    for (long it = 1; it <= iter; ++it) {
      ch.iterate(it);
      roots[ch.state().tree.root] += 1.0 / iter;
      const auto pos = std::find(exact.trees.begin(), exact.trees.end(), ch.state().tree.deleted);
      REQUIRE(pos != exact.trees.end());
      trees[pos - exact.trees.begin()] += 1.0 / iter;
    }
    MESSAGE("max_mig " << max_mig << " root TV " << tv(exact.root_marginal, roots) << " tree TV "
                       << tv(exact.tree_marginal, trees));
    CHECK(tv(exact.root_marginal, roots) < 0.03);
    CHECK(tv(exact.tree_marginal, trees) < 0.03);
  }
}

TEST_CASE("prior is recovered without the likelihood") {
  const auto start = std::chrono::steady_clock::now();
  const Toy t = toy(4, {{0, 1}, {1, 2}, {1, 3}}, {0, 0, 1, 1, 1, 2, 3, 3}, 4);
  RunConfig cfg;
  cfg.max_mig = 3;
  cfg.tau = 0.0;
  cfg.iter = 100000;
  PriorConfig pr = prior_for(cfg, t.y);
  Model model(t.net, t.y, t.obs_hap, pr);
  Chain ch(model, cfg, 31, true);
  std::vector<double> k(cfg.max_mig + 1, 0.0), g(pr.g + 1, 0.0);
  for (long it = 1; it <= cfg.iter; ++it) {
    ch.iterate(it);
    k[ch.state().clust.K] += 1.0 / cfg.iter;
    g[ch.state().clust.gamma] += 1.0 / cfg.iter;
  }
  for (int K = 0; K <= cfg.max_mig; ++K) {
    CAPTURE(K);
    CHECK(std::abs(k[K] - 1.0 / (cfg.max_mig + 1)) < 0.03);
  }
  for (int v = 4; v <= pr.g; ++v) {
    CAPTURE(v);
    CHECK(std::abs(g[v] - 1.0 / (pr.g - 3)) < 0.03);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 120.0);
}

TEST_CASE("migration and cluster-count posterior matches exact enumeration") {
  // Path 0-1-2-3 with six observations. Every (K, m, labelling) is enumerated;
  // each cluster's marginal likelihood integrates the mean analytically and
  // averages Sigma over independent inverse-Wishart draws (Bartlett).
  const std::vector<int> obs_hap{0, 0, 1, 2, 2, 3};
  const std::vector<int> counts{2, 1, 2, 1};
  const Network net = network_from_edges(4, {{0, 1}, {1, 2}, {2, 3}}, counts);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (int h : obs_hap) rows.push_back({(h >= 2 ? 2.0 : 0.0) + z(rng), z(rng)});
  const NormalizedData y = normalize(rows);
  RunConfig cfg;
  cfg.max_mig = 2;
  const PriorConfig pr = prior_for(cfg, y);
  const int n = static_cast<int>(obs_hap.size());

  const int draws = 20000;
  std::vector<std::vector<std::array<double, 4>>> w(pr.g + 1);  // Sigma^-1 entries, log|Sigma|
  for (int gm = 4; gm <= pr.g; ++gm) {
    std::chi_squared_distribution<double> c1(gm), c2(gm - 1);
    for (int s = 0; s < draws; ++s) {
      const double a11 = std::sqrt(c1(rng)), a22 = std::sqrt(c2(rng)), a21 = z(rng);
      const double w11 = a11 * a11 / pr.psi, w21 = a21 * a11 / pr.psi;
      const double w22 = (a21 * a21 + a22 * a22) / pr.psi;
      w[gm].push_back({w11, w21, w22, -std::log(w11 * w22 - w21 * w21)});
    }
  }
  std::map<std::pair<int, int>, double> cache;
  auto log_marginal = [&](int members, int gm) {
    const auto key = std::make_pair(members, gm);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
    double k = 0.0, sx = 0.0, sy = 0.0;
    for (int i = 0; i < n; ++i)
      if (members >> i & 1) {
        k += 1.0;
        sx += y.values[i];
        sy += y.values[n + i];
      }
    double acc = 0.0;
    for (const auto& [a, b, c, ld] : w[gm]) {
      double quad = 0.0;
      for (int i = 0; i < n; ++i)
        if (members >> i & 1) {
          const double u = y.values[i], v = y.values[n + i];
          quad += a * u * u + 2 * b * u * v + c * v * v;
        }
      const double p11 = k * a + 1 / pr.v, p21 = k * b, p22 = k * c + 1 / pr.v;
      const double bx = a * sx + b * sy, by = b * sx + c * sy;
      const double det = p11 * p22 - p21 * p21;
      const double bpb = (p22 * bx * bx - 2 * p21 * bx * by + p11 * by * by) / det;
      acc += std::exp(-k * std::log(2 * M_PI) - 0.5 * k * ld - std::log(pr.v) - 0.5 * std::log(det) -
                      0.5 * quad + 0.5 * bpb);
    }
    return cache[key] = std::log(acc / draws);
  };

  const auto mask = tree_mask(net, {});
  const auto rows_of = node_rows(obs_hap, net.n_nodes());
  std::vector<double> exact_k(cfg.max_mig + 1, 0.0), exact_eff(cfg.max_mig + 1, 0.0);
  std::function<void(int, std::vector<int>&, int)> multisets = [&](int from, std::vector<int>& m, int K) {
    if (static_cast<int>(m.size()) < K) {
      for (int x = from; x < 4; ++x) {
        m.push_back(x);
        multisets(x, m, K);
        m.pop_back();
      }
      return;
    }
    double log_m = std::lgamma(K + 1.0);
    std::map<int, int> mult;
    for (int x : m) ++mult[x];
    for (const auto& [x, c] : mult) log_m += c * std::log(counts[x] / double(n)) - std::lgamma(c + 1.0);
    const auto u = build_units(net, mask, m, rows_of, obs_hap.size());
    std::vector<int> l(u.size(), 0);
    for (;;) {
      const double la = log_allocation_prior(u, l, K);
      if (std::isfinite(la)) {
        const auto c = observation_labels(u, l);
        std::vector<int> members(K + 1, 0);
        for (int i = 0; i < n; ++i) members[c[i]] |= 1 << i;
        int eff = -1;
        for (int mk : members) eff += mk != 0;
        double lik = 0.0;
        for (int gm = 4; gm <= pr.g; ++gm) {
          double lg = 0.0;
          for (int mk : members)
            if (mk) lg += log_marginal(mk, gm);
          lik += std::exp(lg);
        }
        const double mass = std::exp(log_m + la) * lik;
        exact_k[K] += mass;
        exact_eff[eff] += mass;
      }
      std::size_t i = 0;
      while (i < l.size() && l[i] == K) l[i++] = 0;
      if (i == l.size()) break;
      ++l[i];
    }
  };
  for (int K = 0; K <= cfg.max_mig; ++K) {
    std::vector<int> m;
    multisets(0, m, K);
  }
  const double total = std::accumulate(exact_k.begin(), exact_k.end(), 0.0);
  for (double& p : exact_k) p /= total;
  for (double& p : exact_eff) p /= total;

  Model model(net, y, obs_hap, pr);
  Chain ch(model, cfg, 101, false);
  std::vector<double> k(cfg.max_mig + 1, 0.0), eff(cfg.max_mig + 1, 0.0);
  const long iter = 100000;
  for (long it = 1; it <= iter; ++it) {
    ch.iterate(it);
    k[ch.state().clust.K] += 1.0 / iter;
    const std::set<int> used(ch.state().clust.c.begin(), ch.state().clust.c.end());
    eff[used.size() - 1] += 1.0 / iter;
  }
  MESSAGE("K TV " << tv(exact_k, k) << " effective TV " << tv(exact_eff, eff));
  CHECK(tv(exact_k, k) < 0.03);
  CHECK(tv(exact_eff, eff) < 0.03);
}

TEST_CASE("assignment matches exhaustive search") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int cols = 1 + static_cast<int>(rng() % 6);
    const int rows = 1 + static_cast<int>(rng() % cols);
    std::vector<std::vector<double>> s(rows, std::vector<double>(cols));
    for (auto& r : s)
      for (auto& x : r) x = u(rng);
    const auto a = max_assignment(s);
    double got = 0.0;
    std::set<int> distinct(a.begin(), a.end());
    REQUIRE(distinct.size() == static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) got += s[i][a[i]];
    std::vector<int> perm(cols);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1e300;
    do {
      double v = 0.0;
      for (int i = 0; i < rows; ++i) v += s[i][perm[i]];
      best = std::max(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("relabelling") {
  std::mt19937_64 rng(6);
  std::vector<std::vector<double>> rows;
  std::vector<int> truth;
  for (int i = 0; i < 30; ++i) {
    const int l = i % 3;
    truth.push_back(l);
    rows.push_back({5.0 * l + 0.1 * standard_normal(rng), 0.1 * standard_normal(rng)});
  }
  const auto y = normalize(rows);
  Draw d;
  d.c = truth;
  for (int l = 0; l < 4; ++l) {
    Cluster k;
    k.mu = {y.to_normalized(0, 5.0 * l), y.to_normalized(1, 0.0)};
    k.block = {0.01, 0.0, 0.01};
    d.clusters.push_back(k);
  }
  SUBCASE("aligned draw gives the identity") {
    const auto perm = relabel(d, truth, y);
    CHECK(perm == std::vector<int>{0, 1, 2, 3});
  }
  SUBCASE("swapped draw gives the swap and relabelling is idempotent") {
    Draw s = d;
    std::swap(s.clusters[1], s.clusters[2]);
    for (int& l : s.c) l = l == 1 ? 2 : l == 2 ? 1 : l;
    const auto perm = relabel(s, truth, y);
    CHECK(perm == std::vector<int>{0, 2, 1, 3});
    // applying the permutation and relabelling again yields the identity
    Draw t = s;
    for (std::size_t b = 0; b < perm.size(); ++b) t.clusters[perm[b]] = s.clusters[b];
    for (int& l : t.c) l = perm[l];
    CHECK(relabel(t, truth, y) == std::vector<int>{0, 1, 2, 3});
  }
}

TEST_CASE("rand index") {
  CHECK(rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
  CHECK(rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("full run: validity, determinism, bookkeeping") {
  const Toy t = toy(5, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {2, 4}}, {0, 0, 1, 2, 3, 3, 3, 4, 4, 1}, 7);
  RunConfig cfg;
  cfg.max_mig = 2;
  cfg.iter = 3000;
  cfg.post_samples = 100;
  cfg.seed = 12;
  PriorConfig pr = prior_for(cfg, t.y);
  Model model(t.net, t.y, t.obs_hap, pr);
  const auto a = run(cfg, model);
  const auto b = run(cfg, model);
  REQUIRE(a.draws.size() == 200);
  CHECK(a.trees.total() == static_cast<std::uint64_t>(2 * (cfg.iter - cfg.burn_in())));
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    const Draw& d = a.draws[i];
    REQUIRE(is_valid_clustering(d.c, d.m, d.K, t.net, tree_mask(t.net, d.deleted), t.obs_hap));
    CHECK(d.c == b.draws[i].c);
    CHECK(d.root == b.draws[i].root);
    CHECK(d.log_post == b.draws[i].log_post);
    CHECK(d.clusters[0].mu == b.draws[i].clusters[0].mu);
    std::vector<int> sorted = d.perm;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> iota(sorted.size());
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(sorted == iota);
  }
  long visits = 0;
  for (long v : a.chains[0].root_visits) visits += v;
  CHECK(visits == cfg.iter - cfg.burn_in());

  cfg.threads = 1;
  const auto c = run(cfg, model);
  CHECK(c.draws.back().log_post == a.draws.back().log_post);
}
