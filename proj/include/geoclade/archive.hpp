#pragma once

// Run directories: inputs, configuration, draws, tree tallies, diagnostics
// and summaries, written deterministically and readable back for
// re-summarizing.

#include <string>
#include <vector>

#include "geoclade/sampler.hpp"
#include "geoclade/summaries.hpp"

namespace geoclade {

extern const char* const kVersion;

/// Everything derived from the two input files and a configuration.
struct Dataset {
  SequenceSet seqs;
  ObservationTable obs;
  HaplotypeData hap;
  std::vector<int> obs_hap;  // per observation, network node
  Network net;               // counts hold observation counts
  NormalizedData y;
  std::vector<std::string> names;  // per network node
};

Dataset prepare(const std::string& nexus_text, const std::string& coords_text, const RunConfig& cfg,
                const std::string& nexus_source = "<nexus>",
                const std::string& coords_source = "<coords>");

std::string config_json(const RunConfig& cfg, const PriorConfig& prior);
void config_from_json(const std::string& text, RunConfig& cfg, PriorConfig& prior);

std::string draws_csv(const PosteriorArchive& a, int dims);
std::vector<Draw> parse_draws_csv(const std::string& text, int dims, int k_max);

std::string tree_hash_json(const TreeHashTable& t);
TreeHashTable parse_tree_hash_json(const std::string& text);

/// Diagnostics, chain reports and the pivot clustering.
std::string diagnostics_json(const PosteriorArchive& a);
void parse_diagnostics_json(const std::string& text, PosteriorArchive& a);

struct RunFiles {
  std::string nexus_text;
  std::string coords_text;
  std::string run_log;
};

/// Creates `dir` (and parents) and writes every archive file.
void write_archive(const std::string& dir, const PosteriorArchive& a, const Dataset& data,
                   const SummaryReport& summary, const RunFiles& files);

struct LoadedArchive {
  PosteriorArchive archive;
  std::string nexus_text;
  std::string coords_text;
};

/// Raises IoError or ParseError.
LoadedArchive read_archive(const std::string& dir);

}  // namespace geoclade
