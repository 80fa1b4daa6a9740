#include "geoclade/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "geoclade/errors.hpp"

namespace geoclade {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logit(double w) { return std::log(w) - std::log1p(-w); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool accept(double log_alpha, std::mt19937_64& rng) {
  if (std::isnan(log_alpha)) return false;
  if (log_alpha >= 0.0) return true;
  return std::log(uniform01(rng)) < log_alpha;
}

int draw_haplotype(const std::vector<int>& counts, std::mt19937_64& rng) {
  std::discrete_distribution<int> d(counts.begin(), counts.end());
  return d(rng);
}

int multiplicity(const std::vector<int>& m, int h) {
  return static_cast<int>(std::count(m.begin(), m.end(), h));
}

double log_count_share(const std::vector<int>& counts, int h) {
  double total = 0.0;
  for (int c : counts) total += c;
  return std::log(counts[h] / total);
}

double birth_prob(int K, int k_max) {
  if (K >= k_max) return 0.0;
  return K == 0 ? 1.0 : 0.5;
}

double death_prob(int K, int k_max) {
  if (K <= 0) return 0.0;
  return K == k_max ? 1.0 : 0.5;
}

std::vector<int> zero_leaves(const Network& net, const std::vector<char>& mask) {
  std::vector<int> deg(net.n_nodes(), 0);
  for (std::size_t e = 0; e < net.n_edges(); ++e)
    if (mask[e]) {
      ++deg[net.edges[e].first];
      ++deg[net.edges[e].second];
    }
  std::vector<int> out;
  for (std::size_t v = 0; v < net.n_nodes(); ++v)
    if (net.counts[v] == 0 && deg[v] <= 1) out.push_back(static_cast<int>(v));
  return out;
}

// Restores a uniformly chosen deleted edge and deletes a uniform edge of the
// cycle it closes. Returns false when the tree is unchanged.
bool exchange_edge(const Network& net, const std::vector<int>& deleted, std::vector<int>& out,
                   std::mt19937_64& rng) {
  const int j = uniform_int(rng, 0, static_cast<int>(deleted.size()) - 1);
  const int e = deleted[j];
  const auto mask = tree_mask(net, deleted);
  const auto cycle = tree_cycle(net, mask, e);
  const int f = cycle[uniform_int(rng, 0, static_cast<int>(cycle.size()) - 1)];
  if (f == e) return false;
  std::vector<int> set = deleted;
  set[j] = f;
  out = canonical_deleted(net, set);
  return true;
}

}  // namespace

long RunConfig::burn_in() const {
  const long by_fraction = static_cast<long>(std::floor(burn_in_fraction * static_cast<double>(iter)));
  return std::max(0L, std::min(by_fraction, iter - post_samples));
}

void validate(const RunConfig& cfg) {
  if (cfg.max_mig < 0) throw ConfigError("max-mig must be non-negative");
  if (cfg.iter < 1) throw ConfigError("iter must be positive");
  if (cfg.post_samples < 1) throw ConfigError("post-samples must be positive");
  if (cfg.iter < cfg.post_samples) throw ConfigError("iter must be at least post-samples");
  if (cfg.dims < 2) throw ConfigError("dims must be at least 2");
  if (cfg.ds < 0 || cfg.ds > 20) throw ConfigError("ds must lie in [0, 20]");
  if (cfg.chains < 1) throw ConfigError("chains must be positive");
  if (cfg.burn_in_fraction < 0.0 || cfg.burn_in_fraction >= 1.0)
    throw ConfigError("burn-in fraction must lie in [0, 1)");
  if (cfg.tree_every < 1 || cfg.hyper_every < 1) throw ConfigError("move periods must be positive");
  if (cfg.tau < 0.0) throw ConfigError("tempering factor must be non-negative");
  if (cfg.g < 5) throw ConfigError("g must be at least 5");
  if (!(cfg.v > 0.0)) throw ConfigError("V must be positive");
  if (cfg.psi < 0.0) throw ConfigError("psi must be positive");
  if (!(cfg.wc_step > 0.0)) throw ConfigError("w_c step must be positive");
}

PriorConfig prior_for(const RunConfig& cfg, const NormalizedData& y) {
  PriorConfig pr = default_prior(y, cfg.max_mig, cfg.g, cfg.v);
  if (cfg.psi > 0.0) pr.psi = cfg.psi;
  pr.tau = cfg.tau;
  return pr;
}

int Draw::effective_migrations() const {
  std::set<int> used(c.begin(), c.end());
  return static_cast<int>(used.size()) - 1;
}

const Cluster& Draw::aligned_cluster(int a) const {
  for (std::size_t b = 0; b < perm.size(); ++b)
    if (perm[b] == a) return clusters[b];
  throw InternalError("label permutation is incomplete");
}

Model::Model(const Network& n, const NormalizedData& d, std::vector<int> haps, PriorConfig p)
    : net(n), y(d), obs_hap(std::move(haps)), prior(p) {
  rows_of_node = node_rows(obs_hap, net.n_nodes());
  if (obs_hap.size() != y.n) throw ConfigError("observation count mismatch");
}

Chain::Chain(const Model& model, const RunConfig& cfg, std::uint64_t seed, bool start_full)
    : model_(model), cfg_(cfg), rng_(seed) {
  const PriorConfig& pr = model_.prior;
  const int dims = model_.y.dims;
  s_ = initial_tree();
  s_.w_c = 0.5;
  s_.clust.gamma = uniform_int(rng_, 4, pr.g);
  for (int k = 0; k <= pr.k_max; ++k)
    s_.clust.clusters.push_back(draw_prior_cluster(dims, s_.clust.gamma, pr, rng_));
  s_.clust.K = start_full ? pr.k_max : 0;
  for (int k = 0; k < s_.clust.K; ++k) s_.clust.m.push_back(draw_haplotype(model_.net.counts, rng_));
  std::sort(s_.clust.m.begin(), s_.clust.m.end());
  set_units(s_);
  const AllocationContext ctx{s_.units, model_.y, s_.clust.K, s_.clust.gamma, pr, 0.0};
  s_.labels = propose_allocation(ctx, {}, rng_).labels;
  s_.clust.c = observation_labels(s_.units, s_.labels);
  const auto rows = rows_by_label(s_.clust.c, pr.k_max + 1);
  for (int k = 0; k <= s_.clust.K; ++k)
    s_.clust.clusters[k] = propose_cluster(model_.y, rows[k], s_.clust.gamma, pr, rng_);
  report_.root_visits.assign(model_.net.n_nodes(), 0);
  report_.k_visits.assign(pr.k_max + 1, 0);
}

ChainState Chain::initial_tree() {
  const Network& net = model_.net;
  ChainState s;
  std::vector<int> deleted = canonical_deleted(net, default_deleted(net));
  auto mask = tree_mask(net, deleted);
  auto zl = zero_leaves(net, mask);
  for (long step = 0; zl.size() > 1 && net.n_loop() > 0 && step < 200000; ++step) {
    std::vector<int> cand;
    if (!exchange_edge(net, deleted, cand, rng_)) continue;
    const auto cmask = tree_mask(net, cand);
    const auto czl = zero_leaves(net, cmask);
    if (czl.size() <= zl.size() || uniform01(rng_) < 0.05) {
      deleted = std::move(cand);
      mask = cmask;
      zl = czl;
    }
  }
  if (zl.size() > 1)
    throw DegenerateDataError("no spanning tree of the network admits a valid event ordering");
  s.tree.deleted = deleted;
  s.mask = mask;
  if (zl.size() == 1) {
    s.tree.root = zl.front();
  } else {
    s.tree.root = uniform_int(rng_, 0, static_cast<int>(net.n_nodes()) - 1);
  }
  const auto sched = make_schedule(orient(net, s.mask, s.tree.root), net.counts);
  s.log_estimate = log_estimate_orderings(sched, rng_);
  if (!std::isfinite(s.log_estimate)) throw InternalError("initial tree has no valid ordering");
  return s;
}

void Chain::set_units(ChainState& s) const {
  s.units = build_units(model_.net, s.mask, s.clust.m, model_.rows_of_node, model_.y.n);
}

double Chain::log_posterior(const ChainState& s) const {
  const PriorConfig& pr = model_.prior;
  const double la = log_allocation_prior(s.units, s.labels, s.clust.K);
  if (!std::isfinite(la)) return kNegInf;
  double lp = log_k_prior(pr) + log_gamma_prior(pr) + la +
              log_m_prior(s.clust.m, model_.net.counts);
  for (const auto& k : s.clust.clusters) lp += log_cluster_prior(k, s.clust.gamma, pr);
  if (pr.tau != 0.0) lp += pr.tau * log_likelihood(model_.y, s.clust);
  return lp;
}

double Chain::log_posterior() const { return log_posterior(s_); }

void Chain::step_root() {
  const Network& net = model_.net;
  const int r = uniform_int(rng_, 0, static_cast<int>(net.n_nodes()) - 1);
  ++report_.root.proposed;
  if (r == s_.tree.root) {
    ++report_.root.accepted;
    return;
  }
  const auto sched = make_schedule(orient(net, s_.mask, r), net.counts);
  const double est = log_estimate_orderings(sched, rng_);
  if (accept(est - s_.log_estimate, rng_)) {
    s_.tree.root = r;
    s_.log_estimate = est;
    ++report_.root.accepted;
  }
}

void Chain::step_tree_and_clustering(bool tree_moves) {
  const Network& net = model_.net;
  const PriorConfig& pr = model_.prior;
  const int K = s_.clust.K;
  ChainState p = s_;
  double log_extra = 0.0;
  bool structure = false;

  if (tree_moves && net.n_loop() > 0) {
    std::vector<int> cand;
    if (exchange_edge(net, s_.tree.deleted, cand, rng_)) {
      p.tree.deleted = std::move(cand);
      p.mask = tree_mask(net, p.tree.deleted);
      const auto sched = make_schedule(orient(net, p.mask, p.tree.root), net.counts);
      p.log_estimate = log_estimate_orderings(sched, rng_);
      if (!std::isfinite(p.log_estimate)) {
        ++report_.block.proposed;
        return;
      }
      structure = true;
    }
  }
  if (tree_moves && K > 0) {
    const int slot = uniform_int(rng_, 0, K - 1);
    const int a = p.clust.m[slot];
    const int b = draw_haplotype(net.counts, rng_);
    if (a != b) {
      const int mult_a = multiplicity(p.clust.m, a);
      p.clust.m[slot] = b;
      std::sort(p.clust.m.begin(), p.clust.m.end());
      const int mult_b = multiplicity(p.clust.m, b);
      log_extra += std::log(static_cast<double>(mult_b)) + log_count_share(net.counts, a) -
                   std::log(static_cast<double>(mult_a)) - log_count_share(net.counts, b);
      structure = true;
    }
  }
  const double w = s_.w_c;
  const double w_new = logistic(logit(w) + cfg_.wc_step * standard_normal(rng_));
  if (!(w_new > 0.0 && w_new < 1.0)) {
    ++report_.block.proposed;
    return;
  }
  p.w_c = w_new;
  log_extra += std::log(w_new) + std::log1p(-w_new) - std::log(w) - std::log1p(-w);
  if (structure) set_units(p);

  const std::size_t n_nodes = net.n_nodes();
  const auto prev = carry_labels(p.units, s_.units, s_.labels, n_nodes);
  const AllocationContext fwd{p.units, model_.y, K, p.clust.gamma, pr, w_new};
  Allocation alloc = propose_allocation(fwd, prev, rng_);
  p.labels = std::move(alloc.labels);
  p.clust.c = observation_labels(p.units, p.labels);
  double log_fwd = alloc.log_q;
  const auto rows_new = rows_by_label(p.clust.c, pr.k_max + 1);
  for (int k = 0; k <= K; ++k) {
    p.clust.clusters[k] = propose_cluster(model_.y, rows_new[k], p.clust.gamma, pr, rng_);
    log_fwd += log_propose_cluster(model_.y, rows_new[k], p.clust.clusters[k], p.clust.gamma, pr);
  }

  const auto prev_rev = carry_labels(s_.units, p.units, p.labels, n_nodes);
  const AllocationContext rev{s_.units, model_.y, K, s_.clust.gamma, pr, w};
  double log_rev = replay_allocation(rev, s_.labels, prev_rev, rng_);
  const auto rows_old = rows_by_label(s_.clust.c, pr.k_max + 1);
  for (int k = 0; k <= K; ++k)
    log_rev += log_propose_cluster(model_.y, rows_old[k], s_.clust.clusters[k], s_.clust.gamma, pr);

  const double log_alpha = log_posterior(p) - log_posterior(s_) + p.log_estimate -
                           s_.log_estimate + log_extra + log_rev - log_fwd;
  ++report_.block.proposed;
  if (accept(log_alpha, rng_)) {
    s_ = std::move(p);
    ++report_.block.accepted;
  }
}

void Chain::step_dimension() {
  const Network& net = model_.net;
  const PriorConfig& pr = model_.prior;
  const int K = s_.clust.K;
  if (pr.k_max == 0) return;
  ChainState p = s_;
  double log_extra;
  const bool birth = K == 0 || (K < pr.k_max && uniform01(rng_) < 0.5);
  if (birth) {
    const int h = draw_haplotype(net.counts, rng_);
    p.clust.m.push_back(h);
    std::sort(p.clust.m.begin(), p.clust.m.end());
    p.clust.K = K + 1;
    const double fwd = std::log(birth_prob(K, pr.k_max)) + log_count_share(net.counts, h);
    const double rev = std::log(death_prob(K + 1, pr.k_max)) +
                       std::log(multiplicity(p.clust.m, h) / static_cast<double>(K + 1));
    log_extra = rev - fwd;
  } else {
    const int slot = uniform_int(rng_, 0, K - 1);
    const int h = p.clust.m[slot];
    const double fwd = std::log(death_prob(K, pr.k_max)) +
                       std::log(multiplicity(p.clust.m, h) / static_cast<double>(K));
    p.clust.m.erase(p.clust.m.begin() + slot);
    p.clust.K = K - 1;
    const double rev = std::log(birth_prob(K - 1, pr.k_max)) + log_count_share(net.counts, h);
    log_extra = rev - fwd;
  }
  const int K_new = p.clust.K;
  const int top = std::max(K, K_new);
  set_units(p);

  const std::size_t n_nodes = net.n_nodes();
  const auto prev = carry_labels(p.units, s_.units, s_.labels, n_nodes);
  const AllocationContext fwd{p.units, model_.y, K_new, p.clust.gamma, pr, s_.w_c};
  Allocation alloc = propose_allocation(fwd, prev, rng_);
  p.labels = std::move(alloc.labels);
  p.clust.c = observation_labels(p.units, p.labels);
  double log_fwd = alloc.log_q;
  const auto rows_new = rows_by_label(p.clust.c, pr.k_max + 1);
  for (int k = 0; k <= top; ++k) {
    p.clust.clusters[k] = propose_cluster(model_.y, rows_new[k], p.clust.gamma, pr, rng_);
    log_fwd += log_propose_cluster(model_.y, rows_new[k], p.clust.clusters[k], p.clust.gamma, pr);
  }

  const auto prev_rev = carry_labels(s_.units, p.units, p.labels, n_nodes);
  const AllocationContext rev{s_.units, model_.y, K, s_.clust.gamma, pr, s_.w_c};
  double log_rev = replay_allocation(rev, s_.labels, prev_rev, rng_);
  const auto rows_old = rows_by_label(s_.clust.c, pr.k_max + 1);
  for (int k = 0; k <= top; ++k)
    log_rev += log_propose_cluster(model_.y, rows_old[k], s_.clust.clusters[k], s_.clust.gamma, pr);

  const double log_alpha = log_posterior(p) - log_posterior(s_) + log_extra + log_rev - log_fwd;
  ++report_.dimension.proposed;
  if (accept(log_alpha, rng_)) {
    s_ = std::move(p);
    ++report_.dimension.accepted;
  }
}

void Chain::gibbs_refresh() {
  const PriorConfig& pr = model_.prior;
  const auto rows = rows_by_label(s_.clust.c, pr.k_max + 1);
  for (int k = 0; k <= pr.k_max; ++k) {
    Cluster& cl = s_.clust.clusters[k];
    gibbs_mu(model_.y, rows[k], cl, pr, rng_);
    gibbs_sigma(model_.y, rows[k], cl, s_.clust.gamma, pr, rng_);
  }
}

void Chain::step_hyper() {
  const PriorConfig& pr = model_.prior;
  const int g_new = uniform_int(rng_, 4, pr.g);
  ++report_.gamma.proposed;
  if (g_new == s_.clust.gamma) {
    ++report_.gamma.accepted;
    return;
  }
  double log_alpha = 0.0;
  for (const auto& k : s_.clust.clusters)
    log_alpha += log_sigma_prior(k, g_new, pr) - log_sigma_prior(k, s_.clust.gamma, pr);
  if (accept(log_alpha, rng_)) {
    s_.clust.gamma = g_new;
    ++report_.gamma.accepted;
  }
}

void Chain::iterate(long iteration) {
  step_root();
  step_tree_and_clustering(iteration % cfg_.tree_every == 0);
  step_dimension();
  gibbs_refresh();
  if (iteration % cfg_.hyper_every == 0) step_hyper();
}

std::vector<int> max_assignment(const std::vector<std::vector<double>>& score) {
  const int n = static_cast<int>(score.size());
  if (n == 0) return {};
  const int m = static_cast<int>(score.front().size());
  if (m < n) throw InternalError("assignment needs at least as many columns as rows");
  // Hungarian algorithm with potentials on the negated scores (1-based).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = -score[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) assign[p[j] - 1] = j - 1;
  return assign;
}

std::vector<int> relabel(const Draw& d, const std::vector<int>& pivot, const NormalizedData& y) {
  const int L = static_cast<int>(d.clusters.size());
  std::vector<int> pivot_labels;
  for (int l : pivot)
    if (std::find(pivot_labels.begin(), pivot_labels.end(), l) == pivot_labels.end())
      pivot_labels.push_back(l);
  std::sort(pivot_labels.begin(), pivot_labels.end());
  const auto rows = rows_by_label(pivot, L);
  std::vector<std::vector<double>> score(pivot_labels.size(), std::vector<double>(L));
  for (std::size_t a = 0; a < pivot_labels.size(); ++a)
    for (int b = 0; b < L; ++b)
      score[a][b] = cluster_log_likelihood(y, rows[pivot_labels[a]], d.clusters[b]);
  const auto assign = max_assignment(score);
  std::vector<int> perm(L, -1);
  std::vector<char> taken(L, 0);
  for (std::size_t a = 0; a < pivot_labels.size(); ++a) {
    perm[assign[a]] = pivot_labels[a];
    taken[pivot_labels[a]] = 1;
  }
  int next = 0;
  for (int b = 0; b < L; ++b) {
    if (perm[b] >= 0) continue;
    while (taken[next]) ++next;
    perm[b] = next;
    taken[next] = 1;
  }
  return perm;
}

double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      ++total;
      if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
    }
  return static_cast<double>(agree) / static_cast<double>(total);
}

namespace {

struct ChainOutput {
  std::vector<Draw> draws;
  TreeHashTable trees;
  ChainReport report;
  std::vector<int> pivot;
};

ChainOutput run_chain(const RunConfig& cfg, const Model& model, int chain,
                      const ProgressFn& progress, std::mutex& progress_mutex) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(chain)};
  std::uint64_t seed;
  {
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    seed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  }
  Chain ch(model, cfg, seed, chain % 2 == 1);
  ChainOutput out;
  const long burn = cfg.burn_in();
  const long span = cfg.iter - burn;
  std::vector<long> save_at;
  for (long s = 0; s < cfg.post_samples; ++s)
    save_at.push_back(burn + ((s + 1) * span) / cfg.post_samples);
  std::size_t next_save = 0;
  const long pivot_until = std::max(burn, 1L);
  double best = kNegInf;
  int last_tick = 0;

  for (long it = 1; it <= cfg.iter; ++it) {
    ch.iterate(it);
    const ChainState& s = ch.state();
    if (it <= pivot_until) {
      const double lp = ch.log_posterior();
      if (out.pivot.empty() || lp > best) {
        best = lp;
        out.pivot = s.clust.c;
      }
    }
    if (it > burn) {
      ++ch.report().root_visits[s.tree.root];
      ++ch.report().k_visits[s.clust.K];
      out.trees.record(s.tree.deleted);
    }
    while (next_save < save_at.size() && save_at[next_save] == it) {
      Draw d;
      d.chain = chain;
      d.iteration = it;
      d.root = s.tree.root;
      d.deleted = s.tree.deleted;
      d.K = s.clust.K;
      d.m = s.clust.m;
      d.c = s.clust.c;
      d.clusters = s.clust.clusters;
      d.gamma = s.clust.gamma;
      d.w_c = s.w_c;
      d.log_post = ch.log_posterior();
      out.draws.push_back(std::move(d));
      ++next_save;
    }
    const int tick = static_cast<int>((it * 10) / cfg.iter) * 10;
    if (progress && tick > last_tick) {
      last_tick = tick;
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(chain, tick);
    }
  }
  ch.report().best_log_post = best;
  out.report = ch.report();
  return out;
}

}  // namespace

PosteriorArchive run(const RunConfig& cfg, const Model& model, const ProgressFn& progress) {
  validate(cfg);
  PosteriorArchive ar;
  ar.config = cfg;
  ar.prior = model.prior;
  std::vector<ChainOutput> outs(cfg.chains);
  std::mutex progress_mutex;
  const int workers = std::max(1, cfg.threads > 0 ? std::min(cfg.threads, cfg.chains) : cfg.chains);
  if (workers == 1) {
    for (int c = 0; c < cfg.chains; ++c) outs[c] = run_chain(cfg, model, c, progress, progress_mutex);
  } else {
    std::mutex next_mutex;
    int next = 0;
    std::vector<std::exception_ptr> errors(cfg.chains);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          int c;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= cfg.chains) return;
            c = next++;
          }
          try {
            outs[c] = run_chain(cfg, model, c, progress, progress_mutex);
          } catch (...) {
            errors[c] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  ar.pivot = outs.front().pivot;
  for (auto& o : outs) {
    for (auto& d : o.draws) {
      d.perm = relabel(d, ar.pivot, model.y);
      ar.draws.push_back(std::move(d));
    }
    ar.trees.merge(o.trees);
    ar.chains.push_back(o.report);
  }

  // Two-chain comparisons.
  Diagnostics& dg = ar.diagnostics;
  if (cfg.chains >= 2) {
    const auto& a = ar.chains[0].root_visits;
    const auto& b = ar.chains[1].root_visits;
    double ta = 0, tb = 0;
    for (long x : a) ta += x;
    for (long x : b) tb += x;
    double tv = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] / ta - b[i] / tb);
    dg.root_tv = 0.5 * tv;
    dg.root_converged = dg.root_tv < cfg.root_tv_threshold;

    std::set<int> pivot_labels(ar.pivot.begin(), ar.pivot.end());
    std::vector<std::map<int, std::vector<double>>> means(2);
    std::vector<std::map<int, int>> eff(2);
    std::vector<long> n_draws(2, 0);
    for (const auto& d : ar.draws) {
      if (d.chain > 1) continue;
      ++n_draws[d.chain];
      ++eff[d.chain][d.effective_migrations()];
      for (int l : pivot_labels) {
        const auto& mu = d.aligned_cluster(l).mu;
        auto& acc = means[d.chain][l];
        acc.resize(mu.size(), 0.0);
        for (std::size_t j = 0; j < mu.size(); ++j) acc[j] += mu[j];
      }
    }
    dg.cluster_converged = true;
    for (int l : pivot_labels) {
      double dist = 0.0;
      for (std::size_t j = 0; j < means[0][l].size(); ++j) {
        const double diff = means[0][l][j] / n_draws[0] - means[1][l][j] / n_draws[1];
        dist += diff * diff;
      }
      dist = std::sqrt(dist);
      dg.mean_distance.push_back(dist);
      if (!(dist < cfg.mean_threshold)) dg.cluster_converged = false;
    }
    for (int c = 0; c < 2; ++c) {
      int best = -1, best_count = -1;
      for (auto [k, cnt] : eff[c])
        if (cnt > best_count) {
          best = k;
          best_count = cnt;
        }
      dg.map_effective.push_back(best);
    }
    if (dg.map_effective[0] != dg.map_effective[1]) dg.cluster_converged = false;
  }
  return ar;
}

}  // namespace geoclade
