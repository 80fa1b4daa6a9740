#pragma once

// Sequence and coordinate ingestion, and collapsing of raw sequences into
// unique haplotypes over effective sites.

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace geoclade {

struct SequenceSet {
  std::vector<std::string> labels;
  std::vector<std::string> residues;  // upper case, one row per sequence

  std::size_t size() const { return labels.size(); }
  std::size_t length() const { return residues.empty() ? 0 : residues.front().size(); }
};

struct Observation {
  std::vector<double> values;  // longitude, latitude, then covariates
  int haplotype_id = 0;        // as written in the file (1-based)
  std::size_t line = 0;        // source line
};

struct ObservationTable {
  int dims = 2;
  std::vector<Observation> rows;
  std::vector<int> location;              // per row, index into location_rows
  std::vector<std::size_t> location_row;  // first row of each location

  std::size_t size() const { return rows.size(); }
  std::size_t n_locations() const { return location_row.size(); }
  double lon(std::size_t i) const { return rows[i].values[0]; }
  double lat(std::size_t i) const { return rows[i].values[1]; }
};

struct HaplotypeData {
  std::vector<std::string> haplotypes;      // rows over effective sites
  std::vector<int> counts;                  // raw sequences per haplotype
  std::size_t effective_length = 0;
  std::vector<int> label_map;               // raw sequence -> haplotype
  std::vector<std::size_t> site_map;        // effective site -> original site (0-based)
  std::vector<std::size_t> dropped_sites;   // original sites with ambiguity codes
  std::vector<std::vector<std::size_t>> site_groups;  // effective site -> all original sites

  std::size_t size() const { return haplotypes.size(); }
};

bool is_ambiguity_code(char c);

SequenceSet parse_nexus(std::istream& in, const std::string& source = "<nexus>");
SequenceSet parse_nexus_string(const std::string& text, const std::string& source = "<nexus>");

ObservationTable parse_coords(std::istream& in, int dims, const std::string& source = "<coords>");
ObservationTable parse_coords_string(const std::string& text, int dims,
                                     const std::string& source = "<coords>");

/// Raises DegenerateDataError when everything collapses to one haplotype.
HaplotypeData collapse_haplotypes(const SequenceSet& seqs);

/// Maps each observation to a raw sequence index. Ids are matched against
/// sequence labels when every label is an integer, otherwise they are 1-based
/// positions in the alignment.
std::vector<int> resolve_sequence_ids(const ObservationTable& obs, const SequenceSet& seqs,
                                      const std::string& source = "<coords>");

/// Observation haplotype index (into HaplotypeData) per row.
std::vector<int> observation_haplotypes(const ObservationTable& obs, const SequenceSet& seqs,
                                        const HaplotypeData& hap,
                                        const std::string& source = "<coords>");

std::string format_nexus(const SequenceSet& seqs);

}  // namespace geoclade
