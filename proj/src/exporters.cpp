#include "geoclade/exporters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "geoclade/errors.hpp"
#include "json.hpp"

namespace geoclade {

namespace {

// KML colours are aabbggrr.
const char* const kKmlColours[] = {"ff2828e6", "ffe67e28", "ff3cb43c", "ff28a0f0",
                                   "ffb43cb4", "ffc8c828", "ff5a5a5a", "ff1e69d2"};
const char* const kSvgColours[] = {"#e62828", "#287ee6", "#3cb43c", "#f0a028",
                                   "#b43cb4", "#28c8c8", "#5a5a5a", "#d2691e"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string kml_ring(const Ellipse& e) {
  std::string out;
  for (const auto& p : ellipse_points(e)) out += num(p[0]) + "," + num(p[1]) + ",0 ";
  out.pop_back();
  return out;
}

std::string kml_head(const std::string& name) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<kml xmlns=\"http://www.opengis.net/kml/2.2\">\n<Document>\n<name>" +
         xml_escape(name) + "</name>\n";
}

const char* const kKmlTail = "</Document>\n</kml>\n";

std::size_t draw_stride(std::size_t n, std::size_t max_draws) {
  return n <= max_draws ? 1 : (n + max_draws - 1) / max_draws;
}

}  // namespace

std::string kml_contours(const ContourSet& c, std::size_t max_draws) {
  std::ostringstream os;
  os << kml_head("cluster contours");
  for (int k = 0; k < 8; ++k) {
    const std::string col = kKmlColours[k];
    os << "<Style id=\"mean" << k << "\"><LineStyle><color>" << col
       << "</color><width>2</width></LineStyle><PolyStyle><color>40" << col.substr(2)
       << "</color></PolyStyle></Style>\n";
    os << "<Style id=\"draw" << k << "\"><LineStyle><color>30" << col.substr(2)
       << "</color><width>1</width></LineStyle><PolyStyle><fill>0</fill></PolyStyle></Style>\n";
  }
  auto placemark = [&](const ContourEllipse& ce, const std::string& name, const std::string& style) {
    os << "<Placemark><name>" << xml_escape(name) << "</name><styleUrl>#" << style << ce.cluster % 8
       << "</styleUrl><Polygon><outerBoundaryIs><LinearRing><coordinates>" << kml_ring(ce.e)
       << "</coordinates></LinearRing></outerBoundaryIs></Polygon></Placemark>\n";
  };
  for (const auto& ce : c.means)
    placemark(ce, "cluster " + std::to_string(ce.cluster + 1) + " (occupied " +
                      short_num(ce.weight) + ")",
              "mean");
  const std::size_t stride = draw_stride(c.draws.size(), max_draws);
  for (std::size_t i = 0; i < c.draws.size(); i += stride)
    placemark(c.draws[i], "draw " + std::to_string(c.draws[i].draw + 1) + " cluster " +
                              std::to_string(c.draws[i].cluster + 1),
              "draw");
  os << kKmlTail;
  return os.str();
}

std::vector<std::array<double, 2>> node_positions(const SummaryReport& r, const Network& net,
                                                  const ObservationTable& obs,
                                                  const std::vector<int>& obs_hap) {
  const std::size_t n = net.n_nodes();
  std::vector<std::array<double, 2>> pos(n, {0.0, 0.0});
  std::vector<char> placed(n, 0);
  std::vector<int> seen(n, 0);
  for (std::size_t i = 0; i < obs_hap.size(); ++i) {
    pos[obs_hap[i]][0] += obs.lon(i);
    pos[obs_hap[i]][1] += obs.lat(i);
    ++seen[obs_hap[i]];
  }
  for (std::size_t v = 0; v < n; ++v)
    if (seen[v]) {
      pos[v][0] /= seen[v];
      pos[v][1] /= seen[v];
      placed[v] = 1;
    }
  std::vector<std::vector<int>> adj(n);
  for (auto [u, v] : r.map_edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  // sweep until every intermediate touches a placed neighbour
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (placed[v]) continue;
      double x = 0, y = 0;
      int k = 0;
      for (int w : adj[v])
        if (placed[w]) {
          x += pos[w][0];
          y += pos[w][1];
          ++k;
        }
      if (!k) continue;
      pos[v] = {x / k, y / k};
      placed[v] = 1;
      progress = true;
    }
  }
  return pos;
}

std::string kml_tree(const SummaryReport& r, const Network& net, const ObservationTable& obs,
                     const std::vector<int>& obs_hap, const std::vector<std::string>& names) {
  const auto pos = node_positions(r, net, obs, obs_hap);
  std::ostringstream os;
  os << kml_head("MAP haplotype tree");
  os << "<Style id=\"observed\"><IconStyle><color>" << kKmlColours[0]
     << "</color><scale>1</scale></IconStyle></Style>\n";
  os << "<Style id=\"intermediate\"><IconStyle><color>ff000000</color><scale>0.5</scale>"
        "</IconStyle></Style>\n";
  os << "<Style id=\"edge\"><LineStyle><color>ff000000</color><width>2</width></LineStyle></Style>\n";
  for (std::size_t v = 0; v < net.n_nodes(); ++v) {
    const bool observed = net.counts[v] > 0;
    os << "<Placemark><name>" << xml_escape(names[v]) << "</name><description>count "
       << net.counts[v] << ", level " << r.levels[v] << ", root probability "
       << short_num(r.root_probs[v]) << "</description><styleUrl>#"
       << (observed ? "observed" : "intermediate") << "</styleUrl><Point><coordinates>"
       << num(pos[v][0]) << "," << num(pos[v][1]) << ",0</coordinates></Point></Placemark>\n";
  }
  for (auto [u, v] : r.map_edges) {
    const int e = net.find_edge(u, v);
    os << "<Placemark><name>" << xml_escape(names[u] + "-" + names[v])
       << "</name><description>edge probability " << short_num(r.edge_probs[e])
       << "</description><styleUrl>#edge</styleUrl><LineString><coordinates>" << num(pos[u][0])
       << "," << num(pos[u][1]) << ",0 " << num(pos[v][0]) << "," << num(pos[v][1])
       << ",0</coordinates></LineString></Placemark>\n";
  }
  os << kKmlTail;
  return os.str();
}

std::string svg_contours(const ContourSet& c, const ObservationTable& obs, const SummaryReport& r,
                         std::size_t max_draws) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  auto extend = [&](double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  };
  for (std::size_t i = 0; i < obs.size(); ++i) extend(obs.lon(i), obs.lat(i));
  for (const auto& ce : c.means)
    for (const auto& p : ellipse_points(ce.e)) extend(p[0], p[1]);
  const double span = std::max({x1 - x0, y1 - y0, 1e-9});
  const double pad = 0.05 * span;
  x0 -= pad;
  y0 -= pad;
  x1 += pad;
  y1 += pad;
  const double width = 800.0;
  const double scale = width / (x1 - x0);
  const double height = (y1 - y0) * scale;
  auto px = [&](double x) { return short_num((x - x0) * scale); };
  auto py = [&](double y) { return short_num((y1 - y) * scale); };
  auto path = [&](const Ellipse& e) {
    std::string d;
    const auto pts = ellipse_points(e);
    for (std::size_t i = 0; i < pts.size(); ++i)
      d += (i ? " L" : "M") + px(pts[i][0]) + "," + py(pts[i][1]);
    return d + " Z";
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << short_num(width) << "\" height=\""
     << short_num(height) << "\" viewBox=\"0 0 " << short_num(width) << " " << short_num(height)
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g id=\"draws\">\n";
  const std::size_t stride = draw_stride(c.draws.size(), max_draws);
  for (std::size_t i = 0; i < c.draws.size(); i += stride)
    os << "<path d=\"" << path(c.draws[i].e) << "\" fill=\"none\" stroke=\""
       << kSvgColours[c.draws[i].cluster % 8] << "\" stroke-opacity=\"0.08\"/>\n";
  os << "</g>\n<g id=\"means\">\n";
  for (const auto& ce : c.means)
    os << "<path d=\"" << path(ce.e) << "\" fill=\"" << kSvgColours[ce.cluster % 8]
       << "\" fill-opacity=\"0.15\" stroke=\"" << kSvgColours[ce.cluster % 8]
       << "\" stroke-width=\"2\"/>\n";
  os << "</g>\n<g id=\"samples\">\n";
  for (std::size_t l = 0; l < obs.n_locations(); ++l) {
    const auto row = obs.location_row[l];
    os << "<circle cx=\"" << px(obs.lon(row)) << "\" cy=\"" << py(obs.lat(row))
       << "\" r=\"3\" fill=\"black\"/>\n";
  }
  os << "</g>\n<g id=\"ancestral\">\n";
  for (std::size_t k = 0; k < r.top_locations.size(); ++k) {
    const auto row = obs.location_row[r.top_locations[k]];
    os << "<circle cx=\"" << px(obs.lon(row)) << "\" cy=\"" << py(obs.lat(row)) << "\" r=\""
       << 9 - 2 * static_cast<int>(k) << "\" fill=\"gold\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(obs.lon(row)) << "\" y=\"" << py(obs.lat(row))
       << "\" dy=\"-12\" font-size=\"12\" text-anchor=\"middle\">" << k + 1 << ": "
       << short_num(r.root_loc_probs[r.top_locations[k]]) << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string tree_json(const SummaryReport& r, const Network& net,
                      const std::vector<std::string>& names) {
  nlohmann::ordered_json j;
  j["root"] = r.map_root;
  j["nodes"] = nlohmann::ordered_json::array();
  for (std::size_t v = 0; v < net.n_nodes(); ++v) {
    nlohmann::ordered_json node;
    node["id"] = v;
    node["name"] = names[v];
    node["observed"] = net.counts[v] > 0;
    node["size"] = net.counts[v];
    node["level"] = r.levels[v];
    node["rootProb"] = r.root_probs[v];
    node["clusterProbs"] = r.cluster_probs[v];
    j["nodes"].push_back(node);
  }
  j["edges"] = nlohmann::ordered_json::array();
  const auto mask = tree_mask(net, r.map_deleted);
  for (std::size_t e = 0; e < net.n_edges(); ++e) {
    nlohmann::ordered_json edge;
    edge["from"] = net.edges[e].first;
    edge["to"] = net.edges[e].second;
    edge["probability"] = r.edge_probs[e];
    edge["inMapTree"] = static_cast<bool>(mask[e]);
    j["edges"].push_back(edge);
  }
  return j.dump(2) + "\n";
}

std::string bands_csv(const std::vector<CovariateBand>& bands) {
  std::string out = "cluster,covariate,q05,q50,q95\n";
  for (const auto& b : bands)
    out += std::to_string(b.cluster + 1) + "," + std::to_string(b.covariate) + "," + num(b.q05) +
           "," + num(b.q50) + "," + num(b.q95) + "\n";
  return out;
}

std::string locations_csv(const SummaryReport& r, const ObservationTable& obs) {
  std::string out = "location,first_row,longitude,latitude,root_probability\n";
  for (std::size_t l = 0; l < obs.n_locations(); ++l) {
    const auto row = obs.location_row[l];
    out += std::to_string(l + 1) + "," + std::to_string(row + 1) + "," + num(obs.lon(row)) + "," +
           num(obs.lat(row)) + "," + num(r.root_loc_probs[l]) + "\n";
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("cannot write " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace geoclade
