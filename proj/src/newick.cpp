#include "geoclade/newick.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <stdexcept>

#include "geoclade/errors.hpp"

namespace geoclade {

namespace {

bool needs_quotes(const std::string& s) {
  return s.find_first_of("()[]':;, \t\n_") != std::string::npos;
}

std::string quote(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "'";
  for (char c : s) {
    out += c;
    if (c == '\'') out += '\'';
  }
  return out + "'";
}

std::string canonical(const std::function<const std::string&(int)>& label,
                      const std::function<const std::vector<int>&(int)>& children, int v) {
  std::vector<std::string> parts;
  for (int c : children(v)) parts.push_back(canonical(label, children, c));
  std::sort(parts.begin(), parts.end());
  std::string out;
  if (!parts.empty()) {
    out = "(";
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
    out += ")";
  }
  return out + quote(label(v));
}

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  NewickTree run() {
    skip();
    tree_.nodes.emplace_back();
    node(0);
    skip();
    if (pos_ >= s_.size() || s_[pos_] != ';') fail("expected ';'");
    ++pos_;
    skip();
    if (pos_ != s_.size()) fail("text after ';'");
    return std::move(tree_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("<newick>", 1, what + " at offset " + std::to_string(pos_));
  }

  void skip() {
    for (;;) {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '[') {
        const auto end = s_.find(']', pos_);
        if (end == std::string::npos) fail("unterminated comment");
        if (tree_.comment.empty()) tree_.comment = s_.substr(pos_ + 1, end - pos_ - 1);
        pos_ = end + 1;
        continue;
      }
      return;
    }
  }

  void node(int v) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      for (;;) {
        const int c = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes[v].children.push_back(c);
        node(c);
        skip();
        if (pos_ >= s_.size()) fail("unbalanced parentheses");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
    skip();
    tree_.nodes[v].label = label();
    skip();
    if (pos_ < s_.size() && s_[pos_] == ':') {
      ++pos_;
      skip();
      const auto start = pos_;
      while (pos_ < s_.size() && std::string("(),:;[").find(s_[pos_]) == std::string::npos &&
             !std::isspace(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      try {
        std::size_t used = 0;
        std::stod(s_.substr(start, pos_ - start), &used);
        if (used != pos_ - start) fail("bad branch length");
      } catch (const std::logic_error&) {
        fail("bad branch length");
      }
    }
  }

  std::string label() {
    std::string out;
    if (pos_ < s_.size() && s_[pos_] == '\'') {
      ++pos_;
      for (;;) {
        if (pos_ >= s_.size()) fail("unterminated quoted label");
        if (s_[pos_] == '\'') {
          if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '\'') {
            out += '\'';
            pos_ += 2;
            continue;
          }
          ++pos_;
          return out;
        }
        out += s_[pos_++];
      }
    }
    while (pos_ < s_.size() && std::string("(),:;[' \t\r\n").find(s_[pos_]) == std::string::npos) {
      out += s_[pos_] == '_' ? ' ' : s_[pos_];
      ++pos_;
    }
    return out;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  NewickTree tree_;
};

}  // namespace

std::string to_newick(const RootedTree& t, const std::vector<std::string>& labels,
                      const std::string& warning) {
  std::function<std::string(int)> rec = [&](int v) {
    std::string out;
    const auto& ch = t.children[v];
    if (!ch.empty()) {
      out = "(";
      for (std::size_t i = 0; i < ch.size(); ++i) out += (i ? "," : "") + rec(ch[i]);
      out += ")";
    }
    return out + quote(labels[v]);
  };
  std::string out;
  if (!warning.empty()) out = "[" + warning + "]";
  return out + rec(t.root) + ";\n";
}

std::string network_tree_newick(const Network& net, const std::vector<char>& mask, int root,
                                const std::vector<std::string>& names) {
  const RootedTree t = orient(net, mask, root);
  std::vector<std::string> labels(net.n_nodes());
  for (std::size_t v = 0; v < net.n_nodes(); ++v)
    if (net.counts[v] > 0) labels[v] = names[v];
  std::string warning;
  if (net.counts[root] == 0 && t.children[root].size() == 2)
    warning = "warning: root " + names[root] + " is an unobserved intermediate of degree 2";
  return to_newick(t, labels, warning);
}

NewickTree parse_newick(const std::string& text) { return Parser(text).run(); }

std::string canonical_form(const NewickTree& t) {
  return canonical([&](int v) -> const std::string& { return t.nodes[v].label; },
                   [&](int v) -> const std::vector<int>& { return t.nodes[v].children; }, 0);
}

std::string canonical_form(const RootedTree& t, const std::vector<std::string>& labels) {
  return canonical([&](int v) -> const std::string& { return labels[v]; },
                   [&](int v) -> const std::vector<int>& { return t.children[v]; }, t.root);
}

}  // namespace geoclade
