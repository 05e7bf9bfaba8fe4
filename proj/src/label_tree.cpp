#include "svp/label_tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>

#include "svp/error.hpp"

namespace svp {

LabelTree::LabelTree(std::vector<TreeNode> nodes, std::size_t num_classes) : nodes_(std::move(nodes)) {
  const std::size_t n = nodes_.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "tree has no nodes");
  for (const auto& node : nodes_) {
    for (NodeId c : node.children) {
      if (c >= n) throw Error(ErrorCode::FormatError, "child id out of range");
    }
  }

  // Cycles first: a cycle also shows up as a node with two parents.
  std::vector<char> color(n, 0);
  for (NodeId start = 0; start < n; ++start) {
    if (color[start]) continue;
    std::vector<std::pair<NodeId, std::size_t>> stack{{start, 0}};
    color[start] = 1;
    while (!stack.empty()) {
      auto& [v, i] = stack.back();
      if (i < nodes_[v].children.size()) {
        NodeId c = nodes_[v].children[i++];
        if (color[c] == 1) throw Error(ErrorCode::CycleDetected, "cycle through node " + std::to_string(c));
        if (color[c] == 0) {
          color[c] = 1;
          stack.push_back({c, 0});
        }
      } else {
        color[v] = 2;
        stack.pop_back();
      }
    }
  }

  for (auto& node : nodes_) node.parent = kNoNode;
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId c : nodes_[v].children) {
      if (nodes_[c].parent != kNoNode) {
        throw Error(ErrorCode::FormatError, "node " + std::to_string(c) + " has several parents");
      }
      nodes_[c].parent = v;
    }
  }
  std::vector<NodeId> roots;
  for (NodeId v = 0; v < n; ++v)
    if (nodes_[v].parent == kNoNode) roots.push_back(v);
  if (roots.empty()) throw Error(ErrorCode::CycleDetected, "no root");
  if (roots.size() > 1) {
    throw Error(ErrorCode::MultipleRoots, std::to_string(roots.size()) + " roots");
  }
  root_ = roots.front();

  leaf_of_.assign(num_classes, kNoNode);
  for (NodeId v = 0; v < n; ++v) {
    const auto& node = nodes_[v];
    if (node.children.size() == 1) {
      throw Error(ErrorCode::UnaryInternalNode, "node " + std::to_string(v) + " has one child");
    }
    if (!node.children.empty()) {
      if (node.label) throw Error(ErrorCode::FormatError, "internal node " + std::to_string(v) + " has a class");
      continue;
    }
    if (!node.label) throw Error(ErrorCode::UnmappedClass, "leaf " + std::to_string(v) + " has no class");
    const ClassId c = *node.label;
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
      throw Error(ErrorCode::FormatError, "class " + std::to_string(c) + " out of range");
    }
    if (leaf_of_[static_cast<std::size_t>(c)] != kNoNode) {
      throw Error(ErrorCode::FormatError, "class " + std::to_string(c) + " mapped twice");
    }
    leaf_of_[static_cast<std::size_t>(c)] = v;
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (leaf_of_[c] == kNoNode) throw Error(ErrorCode::UnmappedClass, "class " + std::to_string(c) + " has no leaf");
  }
}

NodeId LabelTree::leaf_of(ClassId c) const {
  if (c < 0 || static_cast<std::size_t>(c) >= leaf_of_.size()) {
    throw Error(ErrorCode::UnmappedClass, "class " + std::to_string(c) + " not in tree");
  }
  return leaf_of_[static_cast<std::size_t>(c)];
}

std::vector<NodeId> LabelTree::path(ClassId c) const {
  std::vector<NodeId> out;
  for (NodeId v = leaf_of(c); v != kNoNode; v = nodes_[v].parent) out.push_back(v);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<NodeId> LabelTree::internal_nodes() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < nodes_.size(); ++v)
    if (!nodes_[v].children.empty()) out.push_back(v);
  return out;
}

std::vector<ClassId> LabelTree::classes_under(NodeId v) const {
  std::vector<ClassId> out;
  std::vector<NodeId> stack{v};
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    if (nodes_[u].label) out.push_back(*nodes_[u].label);
    for (NodeId c : nodes_[u].children) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string LabelTree::to_text() const {
  std::ostringstream os;
  os << "# label tree: " << nodes_.size() << " nodes, " << leaf_of_.size() << " classes\n";
  for (NodeId v = 0; v < nodes_.size(); ++v)
    for (NodeId c : nodes_[v].children) os << v << '\t' << c << '\n';
  for (NodeId v = 0; v < nodes_.size(); ++v)
    if (nodes_[v].label) os << "L\t" << v << '\t' << *nodes_[v].label << '\n';
  return os.str();
}

LabelTree load_hierarchy(std::string_view text, std::optional<std::size_t> num_classes) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
  std::vector<std::pair<std::uint64_t, std::int64_t>> leaves;
  std::map<std::uint64_t, NodeId> ids;

  auto parse_uint = [](const std::string& tok, std::size_t line) -> std::uint64_t {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad id '" + tok + "'");
    }
    return std::stoull(tok);
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream fields(raw);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok[0] == "L") {
      if (tok.size() != 3) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected L node class");
      std::uint64_t node = parse_uint(tok[1], line_no);
      leaves.emplace_back(node, static_cast<std::int64_t>(parse_uint(tok[2], line_no)));
      ids.emplace(node, 0);
    } else {
      if (tok.size() != 2) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected parent child");
      std::uint64_t p = parse_uint(tok[0], line_no);
      std::uint64_t c = parse_uint(tok[1], line_no);
      edges.emplace_back(p, c);
      ids.emplace(p, 0);
      ids.emplace(c, 0);
    }
  }
  if (ids.empty()) throw Error(ErrorCode::EmptyInput, "hierarchy is empty");
  NodeId next = 0;
  for (auto& [raw_id, dense] : ids) dense = next++;

  std::vector<TreeNode> nodes(ids.size());
  for (auto [p, c] : edges) nodes[ids[p]].children.push_back(ids[c]);
  std::int64_t max_class = -1;
  for (auto [v, c] : leaves) {
    auto& node = nodes[ids[v]];
    if (node.label) throw Error(ErrorCode::FormatError, "node " + std::to_string(v) + " mapped twice");
    node.label = static_cast<ClassId>(c);
    max_class = std::max(max_class, c);
  }
  const std::size_t k = num_classes.value_or(static_cast<std::size_t>(max_class + 1));
  return LabelTree(std::move(nodes), k);
}

LabelTree flat_tree(std::size_t num_classes) {
  if (num_classes == 0) throw Error(ErrorCode::EmptyInput, "no classes");
  if (num_classes == 1) {
    std::vector<TreeNode> nodes(1);
    nodes[0].label = 0;
    return LabelTree(std::move(nodes), 1);
  }
  std::vector<TreeNode> nodes(num_classes + 1);
  for (std::size_t c = 0; c < num_classes; ++c) {
    nodes[0].children.push_back(static_cast<NodeId>(c + 1));
    nodes[c + 1].label = static_cast<ClassId>(c);
  }
  return LabelTree(std::move(nodes), num_classes);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> normalized_mean(const std::vector<std::vector<double>>& profiles,
                                    std::span<const ClassId> members) {
  std::vector<double> m(profiles.front().size(), 0.0);
  for (ClassId c : members) {
    const auto& p = profiles[static_cast<std::size_t>(c)];
    for (std::size_t d = 0; d < m.size(); ++d) m[d] += p[d];
  }
  const double norm = std::sqrt(dot(m, m));
  if (norm > 0.0)
    for (double& v : m) v /= norm;
  return m;
}

// Splits `members` into halves of sizes ceil(n/2), floor(n/2).
std::pair<std::vector<ClassId>, std::vector<ClassId>> balanced_2means(
    const std::vector<std::vector<double>>& profiles, const std::vector<ClassId>& members, double eps_c,
    std::mt19937_64& rng) {
  const std::size_t n = members.size();
  std::size_t i = rng() % n;
  std::size_t j = rng() % (n - 1);
  if (j >= i) ++j;
  std::vector<double> c1 = profiles[static_cast<std::size_t>(members[i])];
  std::vector<double> c2 = profiles[static_cast<std::size_t>(members[j])];

  std::vector<std::pair<double, ClassId>> margin(n);
  std::vector<ClassId> left, right;
  const std::size_t half = (n + 1) / 2;
  for (int iter = 0; iter < 50; ++iter) {
    for (std::size_t t = 0; t < n; ++t) {
      const auto& p = profiles[static_cast<std::size_t>(members[t])];
      margin[t] = {dot(p, c1) - dot(p, c2), members[t]};
    }
    std::sort(margin.begin(), margin.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    left.clear();
    right.clear();
    for (std::size_t t = 0; t < n; ++t) (t < half ? left : right).push_back(margin[t].second);
    auto n1 = normalized_mean(profiles, left);
    auto n2 = normalized_mean(profiles, right);
    double move = 0.0;
    for (std::size_t d = 0; d < n1.size(); ++d) {
      move = std::max(move, std::fabs(n1[d] - c1[d]));
      move = std::max(move, std::fabs(n2[d] - c2[d]));
    }
    c1 = std::move(n1);
    c2 = std::move(n2);
    if (move < eps_c) break;
  }
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  return {left, right};
}

}  // namespace

LabelTree build_2means_tree(const std::vector<std::vector<double>>& profiles, std::size_t max_leaf,
                            double eps_c, std::uint64_t seed) {
  if (profiles.empty()) throw Error(ErrorCode::EmptyInput, "no class profiles");
  if (max_leaf == 0) throw Error(ErrorCode::InvalidParams, "max_leaf must be positive");
  const std::size_t dim = profiles.front().size();
  for (const auto& p : profiles) {
    if (p.size() != dim) throw Error(ErrorCode::DimensionMismatch, "profiles differ in dimension");
  }
  std::mt19937_64 rng(seed);
  std::vector<TreeNode> nodes;

  std::vector<ClassId> all(profiles.size());
  std::iota(all.begin(), all.end(), 0);
  // Depth-first, children created in order.
  struct Task {
    NodeId node;
    std::vector<ClassId> members;
  };
  nodes.emplace_back();
  std::vector<Task> stack{{0, all}};
  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();
    if (task.members.size() == 1) {
      nodes[task.node].label = task.members.front();
      continue;
    }
    std::vector<std::vector<ClassId>> groups;
    if (task.members.size() <= max_leaf) {
      for (ClassId c : task.members) groups.push_back({c});
    } else {
      auto [a, b] = balanced_2means(profiles, task.members, eps_c, rng);
      groups.push_back(std::move(a));
      groups.push_back(std::move(b));
    }
    std::vector<Task> children;
    for (auto& g : groups) {
      const auto id = static_cast<NodeId>(nodes.size());
      nodes.emplace_back();
      nodes[task.node].children.push_back(id);
      children.push_back({id, std::move(g)});
    }
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
  }
  return LabelTree(std::move(nodes), profiles.size());
}

LabelTree build_huffman_tree(std::span<const double> freqs) {
  if (freqs.empty()) throw Error(ErrorCode::EmptyInput, "no class frequencies");
  for (double f : freqs) {
    if (!(f >= 0.0)) throw Error(ErrorCode::InvalidParams, "frequencies must be non-negative");
  }
  const std::size_t k = freqs.size();
  if (k == 1) return flat_tree(1);
  std::vector<TreeNode> nodes(k);
  for (std::size_t c = 0; c < k; ++c) nodes[c].label = static_cast<ClassId>(c);

  struct Item {
    double weight;
    ClassId min_class;
    NodeId node;
  };
  auto after = [](const Item& a, const Item& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.min_class > b.min_class;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(after)> heap(after);
  for (std::size_t c = 0; c < k; ++c) heap.push({freqs[c], static_cast<ClassId>(c), static_cast<NodeId>(c)});
  while (heap.size() > 1) {
    Item a = heap.top();
    heap.pop();
    Item b = heap.top();
    heap.pop();
    const auto id = static_cast<NodeId>(nodes.size());
    nodes.emplace_back();
    nodes.back().children = {a.node, b.node};
    heap.push({a.weight + b.weight, std::min(a.min_class, b.min_class), id});
  }
  return LabelTree(std::move(nodes), k);
}

LabelTree random_binary_tree(std::size_t num_classes, std::uint64_t seed) {
  if (num_classes == 0) throw Error(ErrorCode::EmptyInput, "no classes");
  std::mt19937_64 rng(seed);
  std::vector<ClassId> perm(num_classes);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<TreeNode> nodes(1);
  struct Task {
    NodeId node;
    std::size_t lo, hi;
  };
  std::vector<Task> stack{{0, 0, num_classes}};
  while (!stack.empty()) {
    Task t = stack.back();
    stack.pop_back();
    const std::size_t n = t.hi - t.lo;
    if (n == 1) {
      nodes[t.node].label = perm[t.lo];
      continue;
    }
    const std::size_t cut = t.lo + 1 + rng() % (n - 1);
    for (auto [lo, hi] : {std::pair{t.lo, cut}, std::pair{cut, t.hi}}) {
      const auto id = static_cast<NodeId>(nodes.size());
      nodes.emplace_back();
      nodes[t.node].children.push_back(id);
      stack.push_back({id, lo, hi});
    }
  }
  return LabelTree(std::move(nodes), num_classes);
}

std::vector<std::vector<double>> class_profiles(const Dataset& data) {
  std::vector<std::vector<double>> prof(data.num_classes, std::vector<double>(data.dim, 0.0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& p = prof[static_cast<std::size_t>(data.y[i])];
    for (const auto& f : data.x[i].features()) p[f.index] += f.value;
  }
  for (auto& p : prof) {
    const double norm = std::sqrt(dot(p, p));
    if (norm > 0.0)
      for (double& v : p) v /= norm;
  }
  return prof;
}

TableNodeModels TableNodeModels::induce(const LabelTree& tree, const ClassDist& dist) {
  const std::size_t n = tree.num_nodes();
  std::vector<double> mass(n, 0.0);
  // Post-order accumulation: children are reached after parents in BFS order.
  std::vector<NodeId> order{tree.root()};
  for (std::size_t i = 0; i < order.size(); ++i)
    for (NodeId c : tree.node(order[i]).children) order.push_back(c);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& node = tree.node(*it);
    if (node.label) mass[*it] = dist.mass(*node.label);
    for (NodeId c : node.children) mass[*it] += mass[c];
  }
  TableNodeModels models(n);
  for (NodeId v : tree.internal_nodes()) {
    const auto& ch = tree.node(v).children;
    std::vector<double> p(ch.size());
    for (std::size_t j = 0; j < ch.size(); ++j) {
      p[j] = mass[v] > 0.0 ? mass[ch[j]] / mass[v] : 1.0 / static_cast<double>(ch.size());
    }
    models.set(v, std::move(p));
  }
  return models;
}

void TableNodeModels::child_probs(NodeId v, const SparseVector&, std::span<double> out) const {
  const auto& p = probs_.at(v);
  std::copy(p.begin(), p.end(), out.begin());
}

void check_node_models(const LabelTree& tree, const NodeModels& models) {
  for (NodeId v : tree.internal_nodes()) {
    if (!models.has(v)) throw Error(ErrorCode::MissingNodeModel, "node " + std::to_string(v) + " has no model");
  }
}

double path_probability(const LabelTree& tree, const TableNodeModels& models, ClassId c) {
  const auto path = tree.path(c);
  double p = 1.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const NodeId v = path[i];
    if (!models.has(v)) throw Error(ErrorCode::MissingNodeModel, "node " + std::to_string(v) + " has no model");
    const auto probs = models.probs(v);
    const auto& ch = tree.node(v).children;
    if (probs.size() != ch.size()) throw Error(ErrorCode::UnnormalizedNode, "node " + std::to_string(v) + " size mismatch");
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::fabs(total - 1.0) > kNormalizationTolerance) {
      throw Error(ErrorCode::UnnormalizedNode, "node " + std::to_string(v) + " sums to " + std::to_string(total));
    }
    const auto pos = static_cast<std::size_t>(std::find(ch.begin(), ch.end(), path[i + 1]) - ch.begin());
    p *= probs[pos];
  }
  return p;
}

HfProvider::HfProvider(const LabelTree& tree, const NodeModels& models, const SparseVector& x)
    : tree_(tree), models_(models), x_(x) {
  check_node_models(tree, models);
  frontier_.push_back({0.0, tree.root()});
}

std::optional<ScoredClass> HfProvider::next() {
  while (!frontier_.empty()) {
    std::pop_heap(frontier_.begin(), frontier_.end(), Lower{});
    const Entry top = frontier_.back();
    frontier_.pop_back();
    const auto& node = tree_.node(top.node);
    if (node.children.empty()) return ScoredClass{*node.label, std::exp(top.log_p)};
    scratch_.resize(node.children.size());
    models_.child_probs(top.node, x_, scratch_);
    ++evaluations_;
    for (std::size_t j = 0; j < node.children.size(); ++j) {
      frontier_.push_back({top.log_p + std::log(scratch_[j]), node.children[j]});
      std::push_heap(frontier_.begin(), frontier_.end(), Lower{});
    }
  }
  return std::nullopt;
}

}  // namespace svp
