#include "geoclade/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "geoclade/errors.hpp"
#include "json.hpp"

namespace geoclade {

namespace {

std::vector<int> labels_for(const std::vector<int>& parent, const std::vector<int>& founders) {
  const std::size_t n = parent.size();
  std::vector<int> label(n, 0);
  // parent[v] < v, so one forward pass settles every node
  for (std::size_t v = 0; v < n; ++v) {
    const auto it = std::find(founders.begin(), founders.end(), static_cast<int>(v));
    if (it != founders.end()) label[v] = static_cast<int>(it - founders.begin()) + 1;
    else if (parent[v] >= 0) label[v] = label[parent[v]];
  }
  return label;
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
  const int n = cfg.n_haplotypes;
  if (n < 2) throw ConfigError("at least two haplotypes are needed");
  if (cfg.n_observations < n) throw ConfigError("every haplotype needs an observation");
  if (cfg.true_K < 0 || cfg.true_K > n - 1)
    throw ConfigError("true K must lie in [0, haplotypes - 1]");
  if (cfg.separation < 0.0) throw ConfigError("separation must be non-negative");
  if (cfg.dims < 2) throw ConfigError("dims must be at least 2");
  const int sites = cfg.effective_sites > 0 ? cfg.effective_sites : n - 1;
  if (sites < n - 1)
    throw ConfigError("need " + std::to_string(n - 1) + " sites for " + std::to_string(n) +
                      " haplotypes, got " + std::to_string(sites));

  std::mt19937_64 rng(cfg.seed);
  SynthData out;
  SynthTruth& t = out.truth;

  // Random recursive tree rooted at 0.
  t.parent.assign(n, -1);
  for (int v = 1; v < n; ++v) t.parent[v] = std::uniform_int_distribution<int>(0, v - 1)(rng);
  t.root = 0;

  // Each edge mutates its own site.
  std::vector<int> site(sites);
  std::iota(site.begin(), site.end(), 0);
  std::shuffle(site.begin(), site.end(), rng);
  const std::string bases = "ACGT";
  std::string root_seq(sites, 'A');
  for (char& ch : root_seq) ch = bases[rng() % 4];
  std::vector<std::string> seqs(n);
  seqs[0] = root_seq;
  for (int v = 1; v < n; ++v) {
    seqs[v] = seqs[t.parent[v]];
    char& ch = seqs[v][site[v - 1]];
    char next = ch;
    while (next == ch) next = bases[rng() % 4];
    ch = next;
  }
  for (int v = 0; v < n; ++v) {
    out.sequences.labels.push_back(std::to_string(v + 1));
    out.sequences.residues.push_back(seqs[v]);
  }

  // Observation counts: one per haplotype, the rest uniformly.
  std::vector<int> count(n, 1);
  for (int i = n; i < cfg.n_observations; ++i) ++count[rng() % n];
  for (int v = 0; v < n; ++v)
    for (int k = 0; k < count[v]; ++k) t.obs_hap.push_back(v);

  // Founders: non-root haplotypes whose subtrees start the new clusters.
  t.K = cfg.true_K;
  const int min_size = std::max(1, cfg.n_observations / (3 * (t.K + 1)));
  std::vector<int> best_founders;
  int best_min = -1;
  std::vector<int> pool(n - 1);
  std::iota(pool.begin(), pool.end(), 1);
  for (int attempt = 0; attempt < 2000 && best_min < min_size; ++attempt) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<int> f(pool.begin(), pool.begin() + t.K);
    const auto label = labels_for(t.parent, f);
    std::vector<int> size(t.K + 1, 0);
    for (int v = 0; v < n; ++v) size[label[v]] += count[v];
    const int smallest = *std::min_element(size.begin(), size.end());
    if (smallest > best_min) {
      best_min = smallest;
      best_founders = f;
    }
  }
  t.founders = best_founders;
  t.hap_label = labels_for(t.parent, t.founders);
  for (int f : t.founders) t.m.push_back(t.parent[f]);
  std::sort(t.m.begin(), t.m.end());
  for (int h : t.obs_hap) t.c.push_back(t.hap_label[h]);

  // Cluster means along longitude, covariates shifted alike.
  for (int k = 0; k <= t.K; ++k) {
    std::vector<double> mean(cfg.dims);
    mean[0] = cfg.base_lon + k * cfg.separation * cfg.geo_sd;
    mean[1] = cfg.base_lat;
    for (int j = 2; j < cfg.dims; ++j) mean[j] = 10.0 * (j - 1) + k * cfg.separation * cfg.cov_sd;
    t.means.push_back(mean);
  }

  std::normal_distribution<double> z(0.0, 1.0);
  ObservationTable& obs = out.observations;
  obs.dims = cfg.dims;
  for (std::size_t i = 0; i < t.obs_hap.size(); ++i) {
    const auto& mean = t.means[t.c[i]];
    std::vector<double> values(cfg.dims);
    for (int j = 0; j < cfg.dims; ++j)
      values[j] = mean[j] + (j < 2 ? cfg.geo_sd : cfg.cov_sd) * z(rng);
    obs.rows.push_back({values, t.obs_hap[i] + 1, i + 1});
    obs.location.push_back(static_cast<int>(i));
    obs.location_row.push_back(i);
  }
  return out;
}

std::string format_coords(const ObservationTable& obs) {
  std::ostringstream os;
  char buf[64];
  for (const auto& r : obs.rows) {
    for (double v : r.values) {
      std::snprintf(buf, sizeof buf, "%.17g ", v);
      os << buf;
    }
    os << r.haplotype_id << '\n';
  }
  return os.str();
}

std::string truth_json(const SynthConfig& cfg, const SynthTruth& t) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["n_haplotypes"] = cfg.n_haplotypes;
  j["n_observations"] = cfg.n_observations;
  j["separation"] = cfg.separation;
  j["geo_sd"] = cfg.geo_sd;
  j["cov_sd"] = cfg.cov_sd;
  j["dims"] = cfg.dims;
  j["root"] = t.root;
  j["parent"] = t.parent;
  j["K"] = t.K;
  j["m"] = t.m;
  j["founders"] = t.founders;
  j["haplotype_cluster"] = t.hap_label;
  j["observation_haplotype"] = t.obs_hap;
  j["c"] = t.c;
  j["means"] = t.means;
  return j.dump(2) + "\n";
}

}  // namespace geoclade
