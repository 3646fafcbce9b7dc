#include "tvlab/tree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "tvlab/errors.hpp"

namespace tvlab {

namespace {

int parse_positive(std::string_view text, std::size_t offset, std::string_view what) {
  int value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw ParseError("expected an integer " + std::string(what) + ", got '" + std::string(text) + "'", offset);
  }
  if (value < 1) throw ParseError(std::string(what) + " must be >= 1", offset);
  return value;
}

bool parse_long(std::string_view text, long& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return !text.empty() && ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

TreeTemplate TreeTemplate::chain(int depth) {
  if (depth < 1) throw ShapeError("chain depth must be >= 1");
  std::vector<Edge> edges;
  edges.push_back({0, std::nullopt, 0});
  for (long i = 1; i <= depth; ++i) edges.push_back({i, i - 1, 0});
  auto t = from_edges(edges);
  t.set_label("chain:" + std::to_string(depth));
  return t;
}

TreeTemplate TreeTemplate::kary(int arity, int depth) {
  if (arity < 1 || depth < 1) throw ShapeError("kary arity and depth must be >= 1");
  if (std::pow(static_cast<double>(arity), depth) > 1e6) throw ShapeError("kary tree too large");
  std::vector<Edge> edges;
  edges.push_back({0, std::nullopt, 0});
  std::vector<long> level{0};
  long next = 1;
  for (int d = 0; d < depth; ++d) {
    std::vector<long> below;
    for (long parent : level) {
      for (int r = 0; r < arity; ++r) {
        edges.push_back({next, parent, r});
        below.push_back(next++);
      }
    }
    level = std::move(below);
  }
  auto t = from_edges(edges);
  t.set_label("kary:" + std::to_string(arity) + ":" + std::to_string(depth));
  return t;
}

TreeTemplate TreeTemplate::from_edges(const std::vector<Edge>& edges) {
  std::map<long, const Edge*> by_id;
  std::optional<long> root;
  for (const auto& e : edges) {
    if (!by_id.emplace(e.id, &e).second) throw ShapeError("duplicate node id " + std::to_string(e.id));
    if (!e.parent) {
      if (root) throw ShapeError("more than one root");
      root = e.id;
    }
  }
  if (!root) throw ShapeError("no root node");

  std::map<long, std::map<int, long>> kids;
  for (const auto& e : edges) {
    if (!e.parent) continue;
    if (!by_id.count(*e.parent)) throw ShapeError("node " + std::to_string(e.id) + " has unknown parent");
    if (e.rank < 0) throw ShapeError("negative child rank at node " + std::to_string(e.id));
    if (!kids[*e.parent].emplace(e.rank, e.id).second) {
      throw ShapeError("duplicate child rank under node " + std::to_string(*e.parent));
    }
  }
  for (const auto& [parent, ranks] : kids) {
    if (ranks.rbegin()->first != static_cast<int>(ranks.size()) - 1) {
      throw ShapeError("child ranks under node " + std::to_string(parent) + " are not contiguous from 0");
    }
  }

  TreeTemplate t;
  std::queue<std::pair<long, NodeId>> frontier;
  t.nodes_.push_back(Node{});
  frontier.emplace(*root, kRoot);
  while (!frontier.empty()) {
    auto [ext, id] = frontier.front();
    frontier.pop();
    auto it = kids.find(ext);
    if (it == kids.end()) continue;
    for (const auto& [rank, child_ext] : it->second) {
      Node n;
      n.parent = id;
      n.rank = rank;
      n.depth = t.nodes_[static_cast<std::size_t>(id)].depth + 1;
      const auto child_id = static_cast<NodeId>(t.nodes_.size());
      t.nodes_.push_back(n);
      t.nodes_[static_cast<std::size_t>(id)].children.push_back(child_id);
      t.depth_ = std::max(t.depth_, n.depth);
      frontier.emplace(child_ext, child_id);
    }
  }
  if (t.nodes_.size() != edges.size()) throw ShapeError("shape contains a cycle or a detached component");
  if (t.depth_ < 1) throw ShapeError("tree depth must be >= 1");
  return t;
}

bool TreeTemplate::is_chain() const {
  return std::all_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.children.size() <= 1; });
}

TreeTemplate parse_shape_file(std::string_view contents) {
  std::vector<TreeTemplate::Edge> edges;
  std::size_t offset = 0;
  while (offset <= contents.size()) {
    std::size_t eol = contents.find('\n', offset);
    if (eol == std::string_view::npos) eol = contents.size();
    std::string_view line = contents.substr(offset, eol - offset);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::vector<std::pair<std::string_view, std::size_t>> fields;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      if (i > start) fields.emplace_back(line.substr(start, i - start), offset + start);
    }
    if (!fields.empty()) {
      if (fields.size() != 3) throw ParseError("expected '<id> <parent|-> <rank>'", offset);
      TreeTemplate::Edge e{};
      if (!parse_long(fields[0].first, e.id)) throw ParseError("bad node id", fields[0].second);
      if (fields[1].first != "-") {
        long parent = 0;
        if (!parse_long(fields[1].first, parent)) throw ParseError("bad parent id", fields[1].second);
        e.parent = parent;
      }
      long rank = 0;
      if (!parse_long(fields[2].first, rank) || rank < 0) throw ParseError("bad child rank", fields[2].second);
      e.rank = static_cast<int>(rank);
      edges.push_back(e);
    }
    if (eol == contents.size()) break;
    offset = eol + 1;
  }
  return TreeTemplate::from_edges(edges);
}

TreeTemplate parse_template(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ParseError("expected chain:<d>, kary:<k>:<d> or file:<path>", 0);
  const std::string_view kind = text.substr(0, colon);
  const std::string_view rest = text.substr(colon + 1);
  TreeTemplate t;
  if (kind == "chain") {
    t = TreeTemplate::chain(parse_positive(rest, colon + 1, "depth"));
  } else if (kind == "kary") {
    const auto second = rest.find(':');
    if (second == std::string_view::npos) throw ParseError("expected kary:<k>:<d>", text.size());
    const int arity = parse_positive(rest.substr(0, second), colon + 1, "arity");
    const int depth = parse_positive(rest.substr(second + 1), colon + 2 + second, "depth");
    t = TreeTemplate::kary(arity, depth);
  } else if (kind == "file") {
    if (rest.empty()) throw ParseError("missing shape file path", colon + 1);
    std::ifstream in{std::string(rest), std::ios::binary};
    if (!in) throw ParseError("cannot open shape file '" + std::string(rest) + "'", colon + 1);
    std::ostringstream body;
    body << in.rdbuf();
    t = parse_shape_file(body.str());
  } else {
    throw ParseError("unknown template kind '" + std::string(kind) + "'", 0);
  }
  t.set_label(std::string(text));
  return t;
}

std::string_view to_string(SiblingMode mode) {
  return mode == SiblingMode::Iid ? "iid" : "without_replacement";
}

SiblingMode parse_sibling_mode(std::string_view text) {
  if (text == "iid") return SiblingMode::Iid;
  if (text == "without_replacement" || text == "without") return SiblingMode::WithoutReplacement;
  throw ConfigError("unknown sibling mode '" + std::string(text) + "'");
}

double child_rate(double parent_rate, const std::optional<Categorical>& target,
                  const std::optional<Categorical>& draft, Token token, bool strict) {
  const double d = draft ? (*draft)[token] : 0.0;
  const double b = target ? (*target)[token] : 0.0;
  if (d <= 0.0) {
    if (strict) throw ZeroDraftProbability("token " + std::to_string(token) + " has zero draft probability");
    return b <= 0.0 ? 0.0 : std::min(parent_rate, 1.0);
  }
  return std::min(parent_rate * b / d, 1.0);
}

void recompute_rates_below(SampledTree& tree, NodeId id, bool strict) {
  // a node's rate is final before its children are pushed
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    const TreeNode& parent = tree.node(u);
    for (NodeId c : parent.children) {
      TreeNode& child = tree.node(c);
      if (!child.alive) continue;
      child.rate = child_rate(parent.rate, parent.target, parent.draft, child.token, strict);
      stack.push_back(c);
    }
  }
}

using Picker = std::function<Token(NodeId, const Categorical*)>;

struct TreeBuilder {
  // Creates nodes in id order. `pick` receives the distribution the child
  // would be drawn from (nullptr once a without-replacement parent has no
  // support left) and returns its token.
  static SampledTree build(const TreeTemplate& tmpl, const ModelPair& pair, TokenSeq prefix, SiblingMode mode,
                           const Picker& pick) {
    SampledTree tree;
    tree.prefix_ = std::move(prefix);
    tree.mode_ = mode;
    tree.depth_ = tmpl.depth();
    tree.nodes_.resize(tmpl.size());
    std::vector<TokenSeq> contexts(tmpl.size());
    std::vector<std::optional<Categorical>> remaining(tmpl.size());

    for (std::size_t i = 0; i < tmpl.size(); ++i) {
      const auto& shape = tmpl.nodes()[i];
      TreeNode& n = tree.nodes_[i];
      n.parent = shape.parent;
      n.rank = shape.rank;
      n.depth = shape.depth;
      n.children = shape.children;
      if (i == 0) {
        contexts[0] = tree.prefix_;
      } else {
        const auto p = static_cast<std::size_t>(shape.parent);
        const Categorical* from = nullptr;
        if (mode == SiblingMode::WithoutReplacement) {
          if (remaining[p]) from = &*remaining[p];
        } else {
          from = &*tree.nodes_[p].draft;
        }
        const Token tok = pick(static_cast<NodeId>(i), from);
        if (tok < 0 || static_cast<std::size_t>(tok) >= pair.vocab_size()) throw Error("tree token out of range");
        if (mode == SiblingMode::WithoutReplacement && remaining[p]) {
          remaining[p] = zero_and_renorm(*remaining[p], tok);
        }
        n.token = tok;
        contexts[i] = contexts[p];
        contexts[i].push_back(tok);
      }
      n.target = pair.query(Which::Target, contexts[i]);
      n.draft = pair.query(Which::Draft, contexts[i]);
      remaining[i] = n.draft;
    }
    tree.nodes_[0].rate = 1.0;
    recompute_rates_below(tree, kRoot, true);
    return tree;
  }
};

SampledTree SampledTree::materialize(const TreeTemplate& tmpl, const ModelPair& pair, TokenSeq prefix,
                                     const TokenSeq& tokens, SiblingMode mode) {
  if (tokens.size() != tmpl.size()) throw ShapeError("materialize: need one token per template node");
  return TreeBuilder::build(tmpl, pair, std::move(prefix), mode,
                            [&](NodeId id, const Categorical*) { return tokens[static_cast<std::size_t>(id)]; });
}

TokenSeq SampledTree::path_tokens(NodeId id) const {
  TokenSeq out;
  for (NodeId u = id; u != kRoot; u = node(u).parent) out.push_back(node(u).token);
  std::reverse(out.begin(), out.end());
  return out;
}

TokenSeq SampledTree::context(NodeId id) const {
  TokenSeq out = prefix_;
  const TokenSeq path = path_tokens(id);
  out.insert(out.end(), path.begin(), path.end());
  return out;
}

std::vector<NodeId> SampledTree::alive_children(NodeId id) const {
  std::vector<NodeId> out;
  for (NodeId c : node(id).children) {
    if (node(c).alive) out.push_back(c);
  }
  return out;
}

NodeId SampledTree::first_alive_child(NodeId id) const {
  for (NodeId c : node(id).children) {
    if (node(c).alive) return c;
  }
  return kNoParent;
}

void SampledTree::delete_leaf(NodeId id) {
  if (id == kRoot) throw Error("delete_leaf: cannot delete the root");
  if (!node(id).alive || !is_leaf(id)) throw Error("delete_leaf: node is not an alive leaf");
  node(id).alive = false;
}

int SampledTree::prune_subtree(NodeId id) {
  int removed = 0;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    TreeNode& n = node(u);
    if (!n.alive) continue;
    n.alive = false;
    ++removed;
    stack.insert(stack.end(), n.children.begin(), n.children.end());
  }
  return removed;
}

TokenSeq SampledTree::labels() const {
  TokenSeq out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.token);
  return out;
}

SampledTree init_acceptance_rates(SampledTree tree, const ModelPair& pair) {
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto id = static_cast<NodeId>(i);
    const TokenSeq ctx = tree.context(id);
    TreeNode& n = tree.node(id);
    n.target = pair.query(Which::Target, ctx);
    n.draft = pair.query(Which::Draft, ctx);
  }
  tree.node(kRoot).rate = 1.0;
  recompute_rates_below(tree, kRoot, true);
  return tree;
}

SampledTree sample_tree(const ModelPair& pair, const TokenSeq& prefix, const TreeTemplate& tmpl, SiblingMode mode,
                        RandomSource& rng) {
  return TreeBuilder::build(tmpl, pair, prefix, mode, [&](NodeId id, const Categorical* from) {
    if (from == nullptr) {
      throw SupportExhausted("no draft support left for child rank " + std::to_string(tmpl.node(id).rank));
    }
    return sample(*from, rng);
  });
}

std::vector<NodeId> first_chain(const SampledTree& tree) {
  if (tree.empty()) throw EmptyTree("first_chain: tree has no nodes");
  std::vector<NodeId> path{kRoot};
  for (NodeId c = tree.first_alive_child(kRoot); c != kNoParent; c = tree.first_alive_child(c)) path.push_back(c);
  return path;
}

std::size_t for_each_labeling(const TreeTemplate& tmpl, const ModelPair& pair, const TokenSeq& prefix,
                              SiblingMode mode, const LabelingVisitor& visit) {
  const double combos =
      std::pow(static_cast<double>(pair.vocab_size()), static_cast<double>(tmpl.non_root_count()));
  if (combos > kEnumerationGuard) throw TooLarge("for_each_labeling: V^nodes exceeds 1e7");

  const std::size_t n = tmpl.size();
  TokenSeq labels(n, -1);
  std::vector<TokenSeq> contexts(n);
  std::vector<std::optional<Categorical>> drafts(n);
  std::vector<std::optional<Categorical>> remaining(n);
  std::size_t count = 0;

  auto open = [&](std::size_t i) {
    if (tmpl.nodes()[i].children.empty()) return;
    drafts[i] = pair.query(Which::Draft, contexts[i]);
    remaining[i] = drafts[i];
  };

  contexts[0] = prefix;
  open(0);
  std::function<void(std::size_t, double)> walk = [&](std::size_t i, double prob) {
    if (i == n) {
      visit(SampledTree::materialize(tmpl, pair, prefix, labels, mode), prob);
      ++count;
      return;
    }
    const auto p = static_cast<std::size_t>(tmpl.nodes()[i].parent);
    const bool without = mode == SiblingMode::WithoutReplacement;
    if (without && !remaining[p]) {
      throw SupportExhausted("for_each_labeling: no draft support left for child rank " +
                             std::to_string(tmpl.nodes()[i].rank));
    }
    const Categorical from = without ? *remaining[p] : *drafts[p];
    for (std::size_t x = 0; x < from.size(); ++x) {
      const auto tok = static_cast<Token>(x);
      if (from[tok] <= 0.0) continue;
      labels[i] = tok;
      contexts[i] = contexts[p];
      contexts[i].push_back(tok);
      auto saved = remaining[p];
      if (without) remaining[p] = zero_and_renorm(from, tok);
      open(i);
      walk(i + 1, prob * from[tok]);
      remaining[p] = std::move(saved);
    }
  };
  walk(1, 1.0);
  return count;
}

std::vector<std::pair<SampledTree, double>> enumerate_labelings(const TreeTemplate& tmpl, const ModelPair& pair,
                                                                const TokenSeq& prefix, SiblingMode mode) {
  std::vector<std::pair<SampledTree, double>> out;
  for_each_labeling(tmpl, pair, prefix, mode, [&](const SampledTree& t, double p) { out.emplace_back(t, p); });
  return out;
}

}  // namespace tvlab
