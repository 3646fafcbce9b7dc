#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tvlab/dist.hpp"
#include "tvlab/model.hpp"

namespace tvlab {

using NodeId = int;
inline constexpr NodeId kRoot = 0;
inline constexpr NodeId kNoParent = -1;

// Shape of a draft tree. Node 0 is the root; ids are assigned breadth-first
// with siblings in rank order, so every parent id precedes its children.
class TreeTemplate {
 public:
  struct Node {
    NodeId parent = kNoParent;
    int rank = 0;
    int depth = 0;
    std::vector<NodeId> children;  // ordered by rank
  };

  struct Edge {
    long id;
    std::optional<long> parent;
    int rank;
  };

  static TreeTemplate chain(int depth);
  static TreeTemplate kary(int arity, int depth);
  // Validates single root, no cycles, contiguous ranks. Throws ShapeError.
  static TreeTemplate from_edges(const std::vector<Edge>& edges);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t non_root_count() const noexcept { return nodes_.size() - 1; }
  int depth() const noexcept { return depth_; }
  bool is_chain() const;

  const std::string& label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

 private:
  std::vector<Node> nodes_;
  int depth_ = 0;
  std::string label_;
};

// "chain:<d>", "kary:<k>:<d>" or "file:<path>".
TreeTemplate parse_template(std::string_view text);
// Shape-file body: one "<id> <parent|-> <rank>" per line, '#' comments.
TreeTemplate parse_shape_file(std::string_view contents);

enum class SiblingMode { Iid, WithoutReplacement };

std::string_view to_string(SiblingMode mode);
SiblingMode parse_sibling_mode(std::string_view text);

struct TreeNode {
  NodeId parent = kNoParent;
  int rank = 0;
  int depth = 0;
  std::vector<NodeId> children;
  Token token = -1;  // -1 at the root
  // Working copies of M_s / M_b at this node's context. Verification
  // rewrites them; an empty optional means the mass is exhausted.
  std::optional<Categorical> draft;
  std::optional<Categorical> target;
  double rate = 1.0;
  bool alive = true;
};

class SampledTree {
 public:
  SampledTree() = default;

  // Labels `tmpl` with tokens[i] at node i (tokens[0] is ignored), fills the
  // working distributions from `pair` and initializes acceptance rates.
  static SampledTree materialize(const TreeTemplate& tmpl, const ModelPair& pair, TokenSeq prefix,
                                 const TokenSeq& tokens, SiblingMode mode);

  const TokenSeq& prefix() const noexcept { return prefix_; }
  SiblingMode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  int depth() const noexcept { return depth_; }

  const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  TreeNode& node(NodeId id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  // Tokens on the path root -> id, excluding the root prefix.
  TokenSeq path_tokens(NodeId id) const;
  // prefix + path_tokens(id): the conditioning context of node id.
  TokenSeq context(NodeId id) const;
  std::vector<NodeId> alive_children(NodeId id) const;
  NodeId first_alive_child(NodeId id) const;
  bool is_leaf(NodeId id) const { return first_alive_child(id) == kNoParent; }

  void delete_leaf(NodeId id);
  // Marks id and all its descendants dead; returns how many were alive.
  int prune_subtree(NodeId id);

  // Every node label, in id order (root entry is -1).
  TokenSeq labels() const;

 private:
  friend struct TreeBuilder;

  TokenSeq prefix_;
  std::vector<TreeNode> nodes_;
  SiblingMode mode_ = SiblingMode::WithoutReplacement;
  int depth_ = 0;
};

// Acceptance threshold of child token `token` under its parent's working
// distributions: min(parent_rate · target(token) / draft(token), 1).
// A zero draft entry throws ZeroDraftProbability when `strict`; otherwise
// yields 0 if target(token) is 0 too, else min(parent_rate, 1).
double child_rate(double parent_rate, const std::optional<Categorical>& target,
                  const std::optional<Categorical>& draft, Token token, bool strict);

// Recomputes rates of every alive strict descendant of `id` from the current
// working distributions.
void recompute_rates_below(SampledTree& tree, NodeId id, bool strict);

// Root rate 1, then the min-product recursion down every path. Working
// copies are refreshed from `pair` first.
SampledTree init_acceptance_rates(SampledTree tree, const ModelPair& pair);

SampledTree sample_tree(const ModelPair& pair, const TokenSeq& prefix, const TreeTemplate& tmpl, SiblingMode mode,
                        RandomSource& rng);

// Root -> first leaf, always descending into the lowest-ranked alive child.
std::vector<NodeId> first_chain(const SampledTree& tree);

using LabelingVisitor = std::function<void(const SampledTree& tree, double probability)>;

// Visits every achievable labeling once with its exact sampling probability.
// Returns the number of labelings. Throws TooLarge above V^nodes = 1e7.
std::size_t for_each_labeling(const TreeTemplate& tmpl, const ModelPair& pair, const TokenSeq& prefix,
                              SiblingMode mode, const LabelingVisitor& visit);

std::vector<std::pair<SampledTree, double>> enumerate_labelings(const TreeTemplate& tmpl, const ModelPair& pair,
                                                                const TokenSeq& prefix, SiblingMode mode);

}  // namespace tvlab
