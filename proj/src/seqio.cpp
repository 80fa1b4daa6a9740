#include "geoclade/seqio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>
#include <unordered_map>

#include "geoclade/errors.hpp"

namespace geoclade {

namespace {

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

struct Token {
  std::string text;
  std::size_t line;
  bool quoted;
};

// Comments in square brackets may nest; newlines inside them are kept so that
// line numbers stay right.
std::string strip_comments(const std::string& text, const std::string& source) {
  std::string out;
  out.reserve(text.size());
  int depth = 0;
  std::size_t line = 1, open_line = 0;
  bool in_quote = false;
  for (char c : text) {
    if (c == '\n') ++line;
    if (depth == 0 && c == '\'') in_quote = !in_quote;
    if (!in_quote && c == '[') {
      if (depth == 0) open_line = line;
      ++depth;
      continue;
    }
    if (!in_quote && c == ']' && depth > 0) {
      --depth;
      continue;
    }
    if (depth > 0) {
      if (c == '\n') out.push_back('\n');
      continue;
    }
    out.push_back(c);
  }
  if (depth > 0) throw ParseError(source, open_line, "unterminated comment");
  return out;
}

std::vector<Token> tokenize(const std::string& text, const std::string& source) {
  std::vector<Token> tokens;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == ';' || c == '=') {
      tokens.push_back({std::string(1, c), line, false});
      ++i;
    } else if (c == '\'') {
      const std::size_t start_line = line;
      std::string word;
      ++i;
      for (;;) {
        if (i >= n) throw ParseError(source, start_line, "unterminated quoted label");
        if (text[i] == '\'') {
          if (i + 1 < n && text[i + 1] == '\'') {
            word.push_back('\'');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        if (text[i] == '\n') ++line;
        word.push_back(text[i++]);
      }
      tokens.push_back({word, start_line, true});
    } else {
      std::string word;
      while (i < n && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != ';' &&
             text[i] != '=') {
        word.push_back(text[i++]);
      }
      tokens.push_back({word, line, false});
    }
  }
  return tokens;
}

bool is_residue_char(char c) {
  switch (c) {
    case 'A': case 'C': case 'G': case 'T': case 'U': case '-':
      return true;
    default:
      return is_ambiguity_code(c);
  }
}

struct Format {
  char gap = '-';
  char missing = '?';
  char match = 0;
  bool interleave = false;
};

long parse_positive(const Token& t, const std::string& source) {
  long v = 0;
  const auto* b = t.text.data();
  const auto [p, ec] = std::from_chars(b, b + t.text.size(), v);
  if (ec != std::errc() || p != b + t.text.size() || v <= 0)
    throw ParseError(source, t.line, "expected a positive integer, got '" + t.text + "'");
  return v;
}

}  // namespace

bool is_ambiguity_code(char c) {
  switch (c) {
    case 'R': case 'Y': case 'S': case 'W': case 'K': case 'M':
    case 'B': case 'D': case 'H': case 'V': case 'N': case '?':
      return true;
    default:
      return false;
  }
}

SequenceSet parse_nexus_string(const std::string& raw, const std::string& source) {
  const std::string text = strip_comments(raw, source);
  const std::vector<Token> tokens = tokenize(text, source);
  if (tokens.empty() || upper(tokens[0].text) != "#NEXUS")
    throw ParseError(source, tokens.empty() ? 1 : tokens[0].line, "missing #NEXUS header");

  // Find the data/characters block.
  std::size_t pos = 0;
  bool found = false;
  for (; pos + 2 < tokens.size(); ++pos) {
    if (tokens[pos].quoted || upper(tokens[pos].text) != "BEGIN") continue;
    const std::string name = upper(tokens[pos + 1].text);
    if ((name == "DATA" || name == "CHARACTERS") && tokens[pos + 2].text == ";") {
      pos += 3;
      found = true;
      break;
    }
  }
  if (!found) throw ParseError(source, 0, "no DATA or CHARACTERS block");

  long ntax = -1, nchar = -1;
  Format fmt;
  SequenceSet out;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::size_t> last_line;
  bool have_matrix = false;
  std::size_t matrix_end_line = 0;

  // Walk commands inside the block.
  while (pos < tokens.size()) {
    const Token& cmd = tokens[pos];
    const std::string word = upper(cmd.text);
    if (word == "END" || word == "ENDBLOCK") break;
    if (word == "DIMENSIONS" || word == "FORMAT") {
      ++pos;
      while (pos < tokens.size() && tokens[pos].text != ";") {
        const Token& key = tokens[pos];
        const std::string k = upper(key.text);
        const bool has_value = pos + 2 < tokens.size() && tokens[pos + 1].text == "=";
        if (word == "DIMENSIONS") {
          if (!has_value) {
            if (k == "NEWTAXA") { ++pos; continue; }
            throw ParseError(source, key.line, "malformed DIMENSIONS entry '" + key.text + "'");
          }
          const Token& val = tokens[pos + 2];
          if (k == "NTAX") ntax = parse_positive(val, source);
          else if (k == "NCHAR") nchar = parse_positive(val, source);
          pos += 3;
          continue;
        }
        if (!has_value) {
          if (k == "INTERLEAVE") fmt.interleave = true;
          ++pos;
          continue;
        }
        const Token& val = tokens[pos + 2];
        const std::string v = upper(val.text);
        if (k == "INTERLEAVE") fmt.interleave = (v == "YES");
        else if (k == "GAP" && val.text.size() == 1) fmt.gap = val.text[0];
        else if (k == "MISSING" && val.text.size() == 1) fmt.missing = val.text[0];
        else if (k == "MATCHCHAR" && val.text.size() == 1) fmt.match = val.text[0];
        else if (k == "DATATYPE" && v != "DNA" && v != "NUCLEOTIDE" && v != "RNA")
          throw ParseError(source, val.line, "unsupported datatype '" + val.text + "'");
        pos += 3;
      }
      ++pos;
      continue;
    }
    if (word != "MATRIX") {
      while (pos < tokens.size() && tokens[pos].text != ";") ++pos;
      ++pos;
      continue;
    }

    have_matrix = true;
    ++pos;
    std::vector<std::vector<const Token*>> lines;
    while (pos < tokens.size() && tokens[pos].text != ";") {
      const Token* t = &tokens[pos++];
      if (lines.empty() || lines.back().front()->line != t->line) lines.push_back({});
      lines.back().push_back(t);
    }
    if (pos >= tokens.size()) throw ParseError(source, cmd.line, "MATRIX is not terminated by ';'");
    matrix_end_line = tokens[pos].line;
    ++pos;

    auto clean = [&](const Token& t, std::size_t row) {
      std::string s;
      s.reserve(t.text.size());
      for (char ch : t.text) {
        char u = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (fmt.match != 0 && ch == fmt.match) {
          if (row == 0) throw ParseError(source, t.line, "match character in the first sequence");
          const std::size_t at = out.residues[row].size() + s.size();
          if (at >= out.residues[0].size())
            throw ParseError(source, t.line, "match character beyond the first sequence");
          u = out.residues[0][at];
        } else if (ch == fmt.gap) {
          u = '-';
        } else if (ch == fmt.missing) {
          u = '?';
        } else if (u == 'U') {
          u = 'T';
        }
        if (!is_residue_char(u))
          throw ParseError(source, t.line, std::string("invalid residue '") + ch + "'");
        s.push_back(u);
      }
      return s;
    };
    auto all_residues = [&](const std::vector<const Token*>& ln) {
      for (const Token* t : ln) {
        if (t->quoted) return false;
        for (char ch : t->text) {
          const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
          if (!(is_residue_char(u) || ch == fmt.gap || ch == fmt.missing ||
                (fmt.match != 0 && ch == fmt.match)))
            return false;
        }
      }
      return true;
    };

    std::size_t current = static_cast<std::size_t>(-1);
    for (const auto& ln : lines) {
      std::size_t width = 0;
      for (const Token* t : ln) width += t->text.size();
      // Sequential continuation of a long sequence across lines.
      if (!fmt.interleave && current != static_cast<std::size_t>(-1) && nchar > 0 &&
          out.residues[current].size() < static_cast<std::size_t>(nchar) && all_residues(ln) &&
          out.residues[current].size() + width <= static_cast<std::size_t>(nchar)) {
        for (const Token* t : ln) out.residues[current] += clean(*t, current);
        last_line[current] = ln.front()->line;
        continue;
      }
      const Token& label = *ln.front();
      auto it = index.find(label.text);
      std::size_t row;
      if (it == index.end()) {
        row = out.labels.size();
        index.emplace(label.text, row);
        out.labels.push_back(label.text);
        out.residues.emplace_back();
        last_line.push_back(label.line);
      } else {
        row = it->second;
        const bool complete = nchar > 0 && out.residues[row].size() >= static_cast<std::size_t>(nchar);
        if (complete || (!fmt.interleave && nchar <= 0))
          throw ParseError(source, label.line, "duplicate sequence label '" + label.text + "'");
      }
      for (std::size_t k = 1; k < ln.size(); ++k) out.residues[row] += clean(*ln[k], row);
      last_line[row] = label.line;
      current = row;
    }
  }

  if (!have_matrix) throw ParseError(source, 0, "DATA block has no MATRIX");
  if (out.size() == 0) throw ParseError(source, matrix_end_line, "MATRIX is empty");
  if (ntax > 0 && out.size() != static_cast<std::size_t>(ntax))
    throw ParseError(source, matrix_end_line,
                     "NTAX=" + std::to_string(ntax) + " but " + std::to_string(out.size()) +
                         " sequences found");
  const std::size_t expected =
      nchar > 0 ? static_cast<std::size_t>(nchar) : out.residues.front().size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (out.residues[r].size() != expected)
      throw ParseError(source, last_line[r],
                       "ragged alignment: sequence '" + out.labels[r] + "' has " +
                           std::to_string(out.residues[r].size()) + " sites, expected " +
                           std::to_string(expected));
  }
  return out;
}

SequenceSet parse_nexus(std::istream& in, const std::string& source) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_nexus_string(ss.str(), source);
}

ObservationTable parse_coords_string(const std::string& text, int dims, const std::string& source) {
  if (dims < 2) throw ConfigError("dims must be at least 2");
  ObservationTable out;
  out.dims = dims;
  std::map<std::pair<double, double>, int> loc_of;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> f;
    for (std::string w; fields >> w;) f.push_back(w);
    if (f.empty() || f[0][0] == '#') continue;
    if (f.size() < static_cast<std::size_t>(dims))
      throw ParseError(source, lineno,
                       "expected " + std::to_string(dims) + " numeric fields, found " +
                           std::to_string(f.size()));
    std::vector<double> values(dims);
    for (int j = 0; j < dims; ++j) {
      const std::string& w = f[j];
      const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), values[j]);
      if (ec != std::errc() || p != w.data() + w.size())
        throw ParseError(source, lineno, "non-numeric coordinate field '" + w + "'");
    }
    if (f.size() == static_cast<std::size_t>(dims))
      throw ParseError(source, lineno, "row has no haplotype ids");
    const auto key = std::make_pair(values[0], values[1]);
    auto it = loc_of.find(key);
    if (it == loc_of.end()) {
      it = loc_of.emplace(key, static_cast<int>(out.location_row.size())).first;
      out.location_row.push_back(out.rows.size());
    }
    for (std::size_t k = dims; k < f.size(); ++k) {
      const std::string& w = f[k];
      int id = 0;
      const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), id);
      if (ec != std::errc() || p != w.data() + w.size() || id < 1)
        throw ParseError(source, lineno, "invalid haplotype id '" + w + "'");
      out.rows.push_back({values, id, lineno});
      out.location.push_back(it->second);
    }
  }
  if (out.rows.empty()) throw ParseError(source, lineno, "no observations");
  return out;
}

ObservationTable parse_coords(std::istream& in, int dims, const std::string& source) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_coords_string(ss.str(), dims, source);
}

HaplotypeData collapse_haplotypes(const SequenceSet& seqs) {
  const std::size_t n = seqs.size();
  const std::size_t len = seqs.length();
  HaplotypeData out;

  std::vector<std::size_t> kept;
  for (std::size_t s = 0; s < len; ++s) {
    bool ambiguous = false;
    for (std::size_t r = 0; r < n && !ambiguous; ++r) ambiguous = is_ambiguity_code(seqs.residues[r][s]);
    if (ambiguous) out.dropped_sites.push_back(s);
    else kept.push_back(s);
  }

  // Merge identical rows over the kept columns, numbered by first appearance.
  std::map<std::string, int> row_of;
  std::vector<std::string> rows;
  out.label_map.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::string key;
    key.reserve(kept.size());
    for (std::size_t s : kept) key.push_back(seqs.residues[r][s]);
    auto [it, inserted] = row_of.emplace(key, static_cast<int>(rows.size()));
    if (inserted) {
      rows.push_back(key);
      out.counts.push_back(0);
    }
    out.counts[it->second] += 1;
    out.label_map[r] = it->second;
  }
  const std::size_t h = rows.size();
  if (h < 2)
    throw DegenerateDataError("all sequences collapse to a single haplotype; nothing to infer");

  // Canonical partition of a column: states renamed by first appearance.
  std::map<std::string, std::size_t> site_of_partition;
  std::vector<std::size_t> eff_cols;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    std::string canon(h, 0);
    char map[256] = {};
    char next = 1;
    for (std::size_t r = 0; r < h; ++r) {
      auto& m = map[static_cast<unsigned char>(rows[r][k])];
      if (m == 0) m = next++;
      canon[r] = m;
    }
    if (next == 2) continue;  // constant
    auto [it, inserted] = site_of_partition.emplace(canon, out.site_groups.size());
    if (inserted) {
      eff_cols.push_back(k);
      out.site_map.push_back(kept[k]);
      out.site_groups.push_back({kept[k]});
    } else {
      out.site_groups[it->second].push_back(kept[k]);
    }
  }
  out.effective_length = eff_cols.size();
  out.haplotypes.assign(h, std::string());
  for (std::size_t r = 0; r < h; ++r) {
    out.haplotypes[r].reserve(eff_cols.size());
    for (std::size_t k : eff_cols) out.haplotypes[r].push_back(rows[r][k]);
  }
  return out;
}

std::vector<int> resolve_sequence_ids(const ObservationTable& obs, const SequenceSet& seqs,
                                      const std::string& source) {
  std::unordered_map<int, int> by_label;
  bool numeric = true;
  for (std::size_t i = 0; i < seqs.size() && numeric; ++i) {
    const std::string& l = seqs.labels[i];
    int v = 0;
    const auto [p, ec] = std::from_chars(l.data(), l.data() + l.size(), v);
    if (ec != std::errc() || p != l.data() + l.size()) numeric = false;
    else by_label.emplace(v, static_cast<int>(i));
  }
  std::vector<int> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const int id = obs.rows[i].haplotype_id;
    if (numeric) {
      auto it = by_label.find(id);
      if (it == by_label.end())
        throw ParseError(source, obs.rows[i].line,
                         "haplotype id " + std::to_string(id) + " matches no sequence label");
      out[i] = it->second;
    } else {
      if (id < 1 || static_cast<std::size_t>(id) > seqs.size())
        throw ParseError(source, obs.rows[i].line,
                         "haplotype id " + std::to_string(id) + " exceeds the " +
                             std::to_string(seqs.size()) + " sequences");
      out[i] = id - 1;
    }
  }
  return out;
}

std::vector<int> observation_haplotypes(const ObservationTable& obs, const SequenceSet& seqs,
                                        const HaplotypeData& hap, const std::string& source) {
  std::vector<int> out = resolve_sequence_ids(obs, seqs, source);
  for (int& v : out) v = hap.label_map[v];
  return out;
}

std::string format_nexus(const SequenceSet& seqs) {
  std::ostringstream os;
  os << "#NEXUS\n\nBEGIN DATA;\n  DIMENSIONS NTAX=" << seqs.size() << " NCHAR=" << seqs.length()
     << ";\n  FORMAT DATATYPE=DNA MISSING=? GAP=-;\n  MATRIX\n";
  for (std::size_t i = 0; i < seqs.size(); ++i)
    os << "    " << seqs.labels[i] << "  " << seqs.residues[i] << "\n";
  os << "  ;\nEND;\n";
  return os.str();
}

}  // namespace geoclade
