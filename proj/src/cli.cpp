#include "geoclade/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "geoclade/archive.hpp"
#include "geoclade/errors.hpp"
#include "geoclade/exporters.hpp"
#include "geoclade/newick.hpp"
#include "geoclade/synthgen.hpp"

namespace geoclade {

namespace {

namespace fs = std::filesystem;

struct Inputs {
  std::string seqs, coords;
};

std::string slurp(const std::string& path, std::istream& in) {
  if (path == "-") return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return read_text(path);
}

std::string default_out(const std::string& fallback) {
  const char* env = std::getenv("GEOCLADE_OUT");
  return env && *env ? env : fallback;
}

std::string source_name(const std::string& path) { return path == "-" ? "<stdin>" : path; }

void add_run_flags(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--max-mig", cfg.max_mig, "maximum number of migrations")->capture_default_str();
  sub.add_option("--iter", cfg.iter, "number of MCMC iterations")->capture_default_str();
  sub.add_option("--ds", cfg.ds, "parsimony relaxation")->capture_default_str();
  sub.add_option("--post-samples", cfg.post_samples, "saved draws per chain")->capture_default_str();
  sub.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  sub.add_option("--chains", cfg.chains, "number of chains")->capture_default_str();
  sub.add_option("--threads", cfg.threads, "concurrent chains (0: one per chain)")->capture_default_str();
  sub.add_option("--g", cfg.g, "upper bound of the covariance concentration")->capture_default_str();
  sub.add_option("--v", cfg.v, "prior variance of cluster means")->capture_default_str();
  sub.add_option("--psi", cfg.psi, "covariance scale (0: data-driven default)")->capture_default_str();
  sub.add_option("--tau", cfg.tau, "likelihood tempering factor")->capture_default_str();
  sub.add_option("--tree-every", cfg.tree_every, "iterations between tree moves")->capture_default_str();
  sub.add_option("--root-tv", cfg.root_tv_threshold, "root convergence threshold")->capture_default_str();
  sub.add_option("--mean-distance", cfg.mean_threshold, "cluster-mean convergence threshold")
      ->capture_default_str();
  sub.add_option("--node-budget", cfg.node_budget, "maximum inferred intermediates")
      ->capture_default_str();
}

std::string progress_bar(int chain) {
  return "Chain " + std::to_string(chain + 1) + ": |====================|100%\n";
}

std::string location_rows(const SummaryReport& r, const ObservationTable& obs) {
  std::string out;
  for (std::size_t k = 0; k < r.top_locations.size(); ++k)
    out += (k ? "," : "") + std::to_string(obs.location_row[r.top_locations[k]] + 1);
  return out;
}

std::string convergence_lines(const SummaryReport& r) {
  std::string out;
  if (!r.root_converged) out += "NO ROOT CONVERGENCE: You need to re-run the sampler with more iterations\n";
  if (!r.cluster_converged)
    out += "NO CLUSTERING CONVERGENCE: You need to re-run the sampler with more iterations\n";
  return out;
}

std::string results_text(const SummaryReport& r, const Dataset& d) {
  std::ostringstream os;
  os << "The most likely root node is " << d.names[r.map_root] << "\n";
  os << "The most likely ancestral locations are " << location_rows(r, d.obs) << "\n";
  os << "The most likely number of migrations is " << r.map_effective << "\n";
  os << convergence_lines(r);
  return os.str();
}

int do_run(const Inputs& in_paths, RunConfig cfg, const std::string& out_dir, bool quiet,
           std::istream& in, std::ostream& out) {
  if (in_paths.seqs == "-" && in_paths.coords == "-")
    throw ConfigError("only one of --seqs and --coords can read standard input");
  validate(cfg);
  const std::string nexus = slurp(in_paths.seqs, in);
  const std::string coords = slurp(in_paths.coords, in);
  const Dataset data =
      prepare(nexus, coords, cfg, source_name(in_paths.seqs), source_name(in_paths.coords));

  std::ostringstream log;
  log << "Starting geoclade " << kVersion << "...\n";
  log << "Inferring possible missing sequences....\n";
  log << "Counting loops in the network...\n\n";
  if (data.net.n_loop() == 0) log << "The program found no loops that need to be resolved in the network\n\n";
  else log << "The network has " << data.net.n_loop() << " loops to resolve\n\n";
  log << "Number of iterations is " << cfg.iter << "\n";
  log << "Number of saved iterations " << cfg.post_samples << "\n";
  log << "Sample size is " << data.obs.size() << "\n";
  log << "Effective sequence length is " << data.hap.effective_length << "\n";
  log << "Total number of haplotypes (including missing) " << data.net.n_nodes() << "\n";
  log << "Dimension is " << cfg.dims << "\n";
  log << "Parsimony relaxation is " << cfg.ds << "\n";
  log << "Maximum number of migrations is " << cfg.max_mig << "\n\n";
  log << "Starting MCMC sampler (burn-in ends at " << cfg.burn_in() << " of " << cfg.iter
      << " iterations)\n";
  if (!quiet) out << log.str() << std::flush;
  const std::size_t printed = log.str().size();

  const Model model(data.net, data.y, data.obs_hap, prior_for(cfg, data.y));
  const PosteriorArchive archive = run(cfg, model);
  for (int c = 0; c < cfg.chains; ++c) log << progress_bar(c);
  log << "\n";
  const SummaryReport summary = summarize({archive, data.net, data.obs, data.obs_hap, data.y});
  log << results_text(summary, data);
  write_archive(out_dir, archive, data, summary, {nexus, coords, log.str()});
  if (!quiet) out << log.str().substr(printed);
  out << "Archive written to " << out_dir << "\n";
  return summary.root_converged && summary.cluster_converged ? 0 : 2;
}

struct Reloaded {
  LoadedArchive loaded;
  Dataset data;
};

Reloaded reload(const std::string& dir) {
  Reloaded r;
  r.loaded = read_archive(dir);
  r.data = prepare(r.loaded.nexus_text, r.loaded.coords_text, r.loaded.archive.config);
  return r;
}

int do_export(const std::string& dir, std::string out_dir, std::ostream& out) {
  const Reloaded r = reload(dir);
  const PosteriorArchive& a = r.loaded.archive;
  const Dataset& d = r.data;
  if (out_dir.empty()) out_dir = (fs::path(dir) / "exports").string();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  const SummaryReport s = summarize({a, d.net, d.obs, d.obs_hap, d.y});
  const ContourSet c = contours(a, d.y);
  const fs::path o(out_dir);
  write_text((o / "contours.kml").string(), kml_contours(c));
  write_text((o / "tree.kml").string(), kml_tree(s, d.net, d.obs, d.obs_hap, d.names));
  write_text((o / "contours.svg").string(), svg_contours(c, d.obs, s));
  write_text((o / "tree.json").string(), tree_json(s, d.net, d.names));
  write_text((o / "tree.newick").string(),
             network_tree_newick(d.net, tree_mask(d.net, s.map_deleted), s.map_root, d.names));
  write_text((o / "locations.csv").string(), locations_csv(s, d.obs));
  if (d.y.dims > 2) write_text((o / "bands.csv").string(), bands_csv(covariate_bands(a, d.y)));
  out << "Exports written to " << out_dir << "\n";
  return 0;
}

int do_validate(const Inputs& paths, int dims, std::istream& in, std::ostream& out) {
  if (paths.seqs == "-" && paths.coords == "-")
    throw ConfigError("only one of --seqs and --coords can read standard input");
  const ObservationTable obs =
      parse_coords_string(slurp(paths.coords, in), dims, source_name(paths.coords));
  std::set<int> ids;
  for (const auto& r : obs.rows) ids.insert(r.haplotype_id);
  out << obs.size() << " observations, " << obs.n_locations() << " locations, " << ids.size()
      << " haplotype ids\n";
  if (!paths.seqs.empty()) {
    const SequenceSet seqs = parse_nexus_string(slurp(paths.seqs, in), source_name(paths.seqs));
    const HaplotypeData hap = collapse_haplotypes(seqs);
    observation_haplotypes(obs, seqs, hap, source_name(paths.coords));
    out << seqs.size() << " sequences of length " << seqs.length() << ", " << hap.size()
        << " haplotypes, effective length " << hap.effective_length << "\n";
  }
  return 0;
}

int do_simulate(const SynthConfig& sc, const std::string& out_dir, std::ostream& out) {
  const SynthData d = generate(sc);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  const fs::path o(out_dir);
  write_text((o / "sequences.nex").string(), format_nexus(d.sequences));
  write_text((o / "coords.txt").string(), format_coords(d.observations));
  write_text((o / "truth.json").string(), truth_json(sc, d.truth));
  out << "Simulated " << d.observations.size() << " observations of " << sc.n_haplotypes
      << " haplotypes into " << out_dir << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Bayesian phylogeographic clustering of haplotype trees", "geoclade"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunConfig cfg;
  Inputs paths;
  std::string out_dir, archive_dir;
  bool quiet = false;

  auto* run_cmd = app.add_subcommand("run", "sample the posterior and write an archive");
  run_cmd->add_option("--seqs", paths.seqs, "NEXUS alignment ('-' for stdin)")->required();
  run_cmd->add_option("--coords", paths.coords, "coordinate table ('-' for stdin)")->required();
  run_cmd->add_option("--dims", cfg.dims, "columns before the haplotype ids")->required();
  run_cmd->add_option("--out", out_dir, "archive directory (default $GEOCLADE_OUT or geoclade_run)");
  run_cmd->add_flag("--quiet", quiet, "only report the archive path");
  add_run_flags(*run_cmd, cfg);

  auto* sum_cmd = app.add_subcommand("summarize", "recompute the summary of an archive");
  sum_cmd->add_option("--archive", archive_dir, "archive directory")->required();
  sum_cmd->add_option("--out", out_dir, "write the summary JSON here instead of stdout");

  auto* exp_cmd = app.add_subcommand("export", "write KML, SVG, newick, JSON and CSV files");
  exp_cmd->add_option("--archive", archive_dir, "archive directory")->required();
  exp_cmd->add_option("--out", out_dir, "export directory (default <archive>/exports)");

  SynthConfig sc;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim_cmd->add_option("--out", out_dir, "output directory (default $GEOCLADE_OUT or geoclade_sim)");
  sim_cmd->add_option("--seed", sc.seed)->capture_default_str();
  sim_cmd->add_option("--haplotypes", sc.n_haplotypes)->capture_default_str();
  sim_cmd->add_option("--observations", sc.n_observations)->capture_default_str();
  sim_cmd->add_option("--sites", sc.effective_sites, "0: one per tree edge")->capture_default_str();
  sim_cmd->add_option("--true-k", sc.true_K, "number of migrations")->capture_default_str();
  sim_cmd->add_option("--separation", sc.separation, "in within-cluster standard deviations")
      ->capture_default_str();
  sim_cmd->add_option("--geo-sd", sc.geo_sd)->capture_default_str();
  sim_cmd->add_option("--cov-sd", sc.cov_sd)->capture_default_str();
  sim_cmd->add_option("--dims", sc.dims)->capture_default_str();

  int validate_dims = 2;
  auto* val_cmd = app.add_subcommand("validate", "check input files without sampling");
  val_cmd->add_option("--coords", paths.coords, "coordinate table ('-' for stdin)")->required();
  val_cmd->add_option("--seqs", paths.seqs, "NEXUS alignment ('-' for stdin)");
  val_cmd->add_option("--dims", validate_dims, "columns before the haplotype ids")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*run_cmd) return do_run(paths, cfg, out_dir.empty() ? default_out("geoclade_run") : out_dir, quiet, in, out);
    if (*sum_cmd) {
      const Reloaded r = reload(archive_dir);
      const Dataset& d = r.data;
      const std::string text = summary_json(
          summarize({r.loaded.archive, d.net, d.obs, d.obs_hap, d.y}), d.names);
      if (out_dir.empty()) out << text;
      else write_text(out_dir, text);
      return 0;
    }
    if (*exp_cmd) return do_export(archive_dir, out_dir, out);
    if (*sim_cmd) return do_simulate(sc, out_dir.empty() ? default_out("geoclade_sim") : out_dir, out);
    if (*val_cmd) return do_validate(paths, validate_dims, in, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cin, std::cout, std::cerr);
}

}  // namespace geoclade
