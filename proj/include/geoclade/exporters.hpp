#pragma once

// File renderings of summaries: KML 2.2, SVG, tree JSON and CSV tables.

#include <string>
#include <vector>

#include "geoclade/summaries.hpp"

namespace geoclade {

/// Mean ellipses plus at most `max_draws` per-draw ellipses, raw degrees.
std::string kml_contours(const ContourSet& c, std::size_t max_draws = 200);

/// One placemark per network node and per MAP tree edge. Observed nodes sit at
/// the mean position of their observations, intermediates at the mean of
/// their placed MAP-tree neighbours.
std::string kml_tree(const SummaryReport& r, const Network& net, const ObservationTable& obs,
                     const std::vector<int>& obs_hap, const std::vector<std::string>& names);

std::string svg_contours(const ContourSet& c, const ObservationTable& obs, const SummaryReport& r,
                         std::size_t max_draws = 200);

std::string tree_json(const SummaryReport& r, const Network& net,
                      const std::vector<std::string>& names);

std::string bands_csv(const std::vector<CovariateBand>& bands);

std::string locations_csv(const SummaryReport& r, const ObservationTable& obs);

/// Node positions used by kml_tree, raw degrees.
std::vector<std::array<double, 2>> node_positions(const SummaryReport& r, const Network& net,
                                                  const ObservationTable& obs,
                                                  const std::vector<int>& obs_hap);

/// Raises IoError when the file cannot be written.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace geoclade
