#include "geoclade/archive.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "geoclade/errors.hpp"
#include "geoclade/exporters.hpp"
#include "json.hpp"

namespace geoclade {

const char* const kVersion = "0.3.0";

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

Dataset prepare(const std::string& nexus_text, const std::string& coords_text, const RunConfig& cfg,
                const std::string& nexus_source, const std::string& coords_source) {
  Dataset d;
  d.seqs = parse_nexus_string(nexus_text, nexus_source);
  d.obs = parse_coords_string(coords_text, cfg.dims, coords_source);
  d.hap = collapse_haplotypes(d.seqs);
  d.obs_hap = observation_haplotypes(d.obs, d.seqs, d.hap, coords_source);
  std::vector<int> counts(d.hap.size(), 0);
  for (int h : d.obs_hap) ++counts[h];
  d.net = build_network(d.hap.haplotypes, counts, {cfg.ds, cfg.node_budget});
  d.y = normalize(d.obs);
  for (std::size_t v = 0; v < d.net.n_nodes(); ++v)
    d.names.push_back(v < d.net.n_observed ? "H" + std::to_string(v + 1)
                                           : "I" + std::to_string(v - d.net.n_observed + 1));
  return d;
}

std::string config_json(const RunConfig& cfg, const PriorConfig& prior) {
  ojson j;
  j["format"] = "geoclade-archive";
  j["version"] = kVersion;
  j["config"] = {{"maxMig", cfg.max_mig},
                 {"iter", cfg.iter},
                 {"ds", cfg.ds},
                 {"postSamples", cfg.post_samples},
                 {"dims", cfg.dims},
                 {"seed", cfg.seed},
                 {"chains", cfg.chains},
                 {"burnInFraction", cfg.burn_in_fraction},
                 {"burnIn", cfg.burn_in()},
                 {"treeEvery", cfg.tree_every},
                 {"hyperEvery", cfg.hyper_every},
                 {"tau", cfg.tau},
                 {"wcStep", cfg.wc_step},
                 {"g", cfg.g},
                 {"v", cfg.v},
                 {"psi", cfg.psi},
                 {"rootTvThreshold", cfg.root_tv_threshold},
                 {"meanThreshold", cfg.mean_threshold},
                 {"nodeBudget", cfg.node_budget}};
  j["prior"] = {{"kMax", prior.k_max},
                {"psi", prior.psi},
                {"g", prior.g},
                {"v", prior.v},
                {"tau", prior.tau}};
  j["inputs"] = {{"sequences", "inputs/sequences.nex"}, {"coordinates", "inputs/coords.txt"}};
  j["files"] = {"draws.csv",    "diagnostics.json", "tree_hash.json",    "summary.json",
                "network.json", "network_edges.txt", "run_log.txt"};
  return j.dump(2) + "\n";
}

void config_from_json(const std::string& text, RunConfig& cfg, PriorConfig& prior) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "geoclade-archive") throw IoError("not a geoclade archive manifest");
    const auto& c = j.at("config");
    cfg.max_mig = c.at("maxMig");
    cfg.iter = c.at("iter");
    cfg.ds = c.at("ds");
    cfg.post_samples = c.at("postSamples");
    cfg.dims = c.at("dims");
    cfg.seed = c.at("seed");
    cfg.chains = c.at("chains");
    cfg.burn_in_fraction = c.at("burnInFraction");
    cfg.tree_every = c.at("treeEvery");
    cfg.hyper_every = c.at("hyperEvery");
    cfg.tau = c.at("tau");
    cfg.wc_step = c.at("wcStep");
    cfg.g = c.at("g");
    cfg.v = c.at("v");
    cfg.psi = c.at("psi");
    cfg.root_tv_threshold = c.at("rootTvThreshold");
    cfg.mean_threshold = c.at("meanThreshold");
    cfg.node_budget = c.at("nodeBudget");
    const auto& p = j.at("prior");
    prior.k_max = p.at("kMax");
    prior.psi = p.at("psi");
    prior.g = p.at("g");
    prior.v = p.at("v");
    prior.tau = p.at("tau");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest.json", 0, e.what());
  }
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  int x;
  while (in >> x) out.push_back(x);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == sep) out.emplace_back();
    else out.back() += c;
  }
  return out;
}

}  // namespace

std::string draws_csv(const PosteriorArchive& a, int dims) {
  std::ostringstream os;
  os << "chain,iteration,root,K,gamma,w_c,log_post,deleted,m,perm,c";
  const int labels = a.config.max_mig + 1;
  for (int b = 0; b < labels; ++b) {
    for (int j = 0; j < dims; ++j) os << ",mu" << b << "_" << j + 1;
    os << ",s" << b << "_11,s" << b << "_12,s" << b << "_22";
    for (int j = 2; j < dims; ++j) os << ",var" << b << "_" << j + 1;
  }
  os << '\n';
  for (const Draw& d : a.draws) {
    os << d.chain << ',' << d.iteration << ',' << d.root << ',' << d.K << ',' << d.gamma << ','
       << num(d.w_c) << ',' << num(d.log_post) << ',' << join(d.deleted) << ',' << join(d.m) << ','
       << join(d.perm) << ',' << join(d.c);
    for (const Cluster& k : d.clusters) {
      for (double x : k.mu) os << ',' << num(x);
      os << ',' << num(k.block.a) << ',' << num(k.block.b) << ',' << num(k.block.c);
      for (double x : k.diag) os << ',' << num(x);
    }
    os << '\n';
  }
  return os.str();
}

std::vector<Draw> parse_draws_csv(const std::string& text, int dims, int k_max) {
  std::vector<Draw> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  const std::size_t per_cluster = dims + 3 + (dims - 2);
  const std::size_t width = 11 + per_cluster * (k_max + 1);
  while (std::getline(in, line)) {
    if (++line_no == 1) continue;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != width)
      throw ParseError("draws.csv", line_no,
                       "expected " + std::to_string(width) + " fields, got " + std::to_string(f.size()));
    try {
      Draw d;
      d.chain = std::stoi(f[0]);
      d.iteration = std::stol(f[1]);
      d.root = std::stoi(f[2]);
      d.K = std::stoi(f[3]);
      d.gamma = std::stoi(f[4]);
      d.w_c = std::stod(f[5]);
      d.log_post = std::stod(f[6]);
      d.deleted = split_ints(f[7]);
      d.m = split_ints(f[8]);
      d.perm = split_ints(f[9]);
      d.c = split_ints(f[10]);
      std::size_t p = 11;
      for (int b = 0; b <= k_max; ++b) {
        Cluster k;
        for (int j = 0; j < dims; ++j) k.mu.push_back(std::stod(f[p++]));
        k.block.a = std::stod(f[p++]);
        k.block.b = std::stod(f[p++]);
        k.block.c = std::stod(f[p++]);
        for (int j = 2; j < dims; ++j) k.diag.push_back(std::stod(f[p++]));
        d.clusters.push_back(std::move(k));
      }
      out.push_back(std::move(d));
    } catch (const std::logic_error&) {
      throw ParseError("draws.csv", line_no, "malformed number");
    }
  }
  return out;
}

std::string tree_hash_json(const TreeHashTable& t) {
  ojson j;
  j["total"] = t.total();
  j["trees"] = ojson::array();
  for (const auto& [deleted, count] : t.entries()) j["trees"].push_back({{"deleted", deleted}, {"count", count}});
  return j.dump(2) + "\n";
}

TreeHashTable parse_tree_hash_json(const std::string& text) {
  TreeHashTable t;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& e : j.at("trees"))
      t.record(e.at("deleted").get<std::vector<int>>(), e.at("count").get<std::uint64_t>());
    if (t.total() != j.at("total").get<std::uint64_t>())
      throw ParseError("tree_hash.json", 0, "tree counts do not add up to the total");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("tree_hash.json", 0, e.what());
  }
  return t;
}

namespace {

ojson moves(const MoveStats& m) { return {{"proposed", m.proposed}, {"accepted", m.accepted}}; }

MoveStats moves_from(const nlohmann::json& j) {
  return {j.at("proposed").get<long>(), j.at("accepted").get<long>()};
}

}  // namespace

std::string diagnostics_json(const PosteriorArchive& a) {
  const Diagnostics& d = a.diagnostics;
  ojson j;
  j["converged"] = d.converged();
  j["root"] = {{"tv", d.root_tv}, {"threshold", a.config.root_tv_threshold}, {"converged", d.root_converged}};
  j["clustering"] = {{"meanDistance", d.mean_distance},
                     {"threshold", a.config.mean_threshold},
                     {"mapEffectiveMigrations", d.map_effective},
                     {"converged", d.cluster_converged}};
  j["chains"] = ojson::array();
  for (const auto& c : a.chains)
    j["chains"].push_back({{"root", moves(c.root)},
                           {"block", moves(c.block)},
                           {"dimension", moves(c.dimension)},
                           {"gamma", moves(c.gamma)},
                           {"rootVisits", c.root_visits},
                           {"kVisits", c.k_visits},
                           {"bestLogPost", c.best_log_post}});
  j["pivot"] = a.pivot;
  return j.dump(2) + "\n";
}

void parse_diagnostics_json(const std::string& text, PosteriorArchive& a) {
  try {
    const auto j = nlohmann::json::parse(text);
    Diagnostics& d = a.diagnostics;
    d.root_tv = j.at("root").at("tv");
    d.root_converged = j.at("root").at("converged");
    d.mean_distance = j.at("clustering").at("meanDistance").get<std::vector<double>>();
    d.map_effective = j.at("clustering").at("mapEffectiveMigrations").get<std::vector<int>>();
    d.cluster_converged = j.at("clustering").at("converged");
    a.chains.clear();
    for (const auto& c : j.at("chains")) {
      ChainReport r;
      r.root = moves_from(c.at("root"));
      r.block = moves_from(c.at("block"));
      r.dimension = moves_from(c.at("dimension"));
      r.gamma = moves_from(c.at("gamma"));
      r.root_visits = c.at("rootVisits").get<std::vector<long>>();
      r.k_visits = c.at("kVisits").get<std::vector<long>>();
      r.best_log_post = c.at("bestLogPost");
      a.chains.push_back(std::move(r));
    }
    a.pivot = j.at("pivot").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("diagnostics.json", 0, e.what());
  }
}

void write_archive(const std::string& dir, const PosteriorArchive& a, const Dataset& data,
                   const SummaryReport& summary, const RunFiles& files) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "inputs", ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const fs::path root(dir);
  write_text((root / "manifest.json").string(), config_json(a.config, a.prior));
  write_text((root / "inputs" / "sequences.nex").string(), files.nexus_text);
  write_text((root / "inputs" / "coords.txt").string(), files.coords_text);
  write_text((root / "draws.csv").string(), draws_csv(a, data.y.dims));
  write_text((root / "diagnostics.json").string(), diagnostics_json(a));
  write_text((root / "tree_hash.json").string(), tree_hash_json(a.trees));
  write_text((root / "summary.json").string(), summary_json(summary, data.names));
  write_text((root / "network.json").string(), network_json(data.net));
  write_text((root / "network_edges.txt").string(), network_edge_list(data.net));
  write_text((root / "run_log.txt").string(), files.run_log);
}

LoadedArchive read_archive(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw IoError(dir + " is not an archive directory");
  LoadedArchive out;
  PosteriorArchive& a = out.archive;
  config_from_json(read_text((root / "manifest.json").string()), a.config, a.prior);
  out.nexus_text = read_text((root / "inputs" / "sequences.nex").string());
  out.coords_text = read_text((root / "inputs" / "coords.txt").string());
  a.draws = parse_draws_csv(read_text((root / "draws.csv").string()), a.config.dims, a.prior.k_max);
  a.trees = parse_tree_hash_json(read_text((root / "tree_hash.json").string()));
  parse_diagnostics_json(read_text((root / "diagnostics.json").string()), a);
  return out;
}

}  // namespace geoclade
