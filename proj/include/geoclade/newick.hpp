#pragma once

// Newick text for rooted haplotype trees. Unobserved intermediates are
// written as unlabeled internal nodes.

#include <string>
#include <vector>

#include "geoclade/haplonet.hpp"

namespace geoclade {

struct NewickNode {
  std::string label;
  std::vector<int> children;
};

struct NewickTree {
  std::vector<NewickNode> nodes;  // nodes[0] is the root
  std::string comment;            // first bracketed comment, if any
};

/// `labels[v]` empty leaves node v unlabeled. A non-empty `warning` is written
/// as a leading bracketed comment.
std::string to_newick(const RootedTree& t, const std::vector<std::string>& labels,
                      const std::string& warning = {});

/// MAP-style export: observed nodes carry their names, intermediates none.
/// An unobserved root of degree two gets a warning comment.
std::string network_tree_newick(const Network& net, const std::vector<char>& mask, int root,
                                const std::vector<std::string>& names);

/// Raises ParseError.
NewickTree parse_newick(const std::string& text);

/// Order-independent form: equal strings mean equal rooted labeled topologies.
std::string canonical_form(const NewickTree& t);
std::string canonical_form(const RootedTree& t, const std::vector<std::string>& labels);

}  // namespace geoclade
