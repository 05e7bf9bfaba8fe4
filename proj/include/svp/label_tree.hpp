#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svp/distribution.hpp"
#include "svp/sparse.hpp"

namespace svp {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct TreeNode {
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  std::optional<ClassId> label;  // leaves only

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Rooted tree whose leaves biject onto classes 0..K-1.
class LabelTree {
 public:
  LabelTree() = default;
  /// Validates the structure; parent links are recomputed from `children`.
  LabelTree(std::vector<TreeNode> nodes, std::size_t num_classes);

  NodeId root() const { return root_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_classes() const { return leaf_of_.size(); }
  const TreeNode& node(NodeId v) const { return nodes_.at(v); }
  std::span<const TreeNode> nodes() const { return nodes_; }
  bool is_leaf(NodeId v) const { return nodes_[v].children.empty(); }
  NodeId leaf_of(ClassId c) const;
  /// Root-to-leaf node sequence for class c.
  std::vector<NodeId> path(ClassId c) const;
  std::size_t depth(ClassId c) const { return path(c).size() - 1; }
  std::vector<NodeId> internal_nodes() const;
  /// Classes in the subtree of v, ascending.
  std::vector<ClassId> classes_under(NodeId v) const;

  /// Hierarchy text format (edges + leaf mapping).
  std::string to_text() const;

  friend bool operator==(const LabelTree&, const LabelTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<NodeId> leaf_of_;
  NodeId root_ = kNoNode;
};

/// Parses `parent<TAB>child` edge lines and `L<TAB>node<TAB>class` leaf
/// lines; `#` starts a comment. Node ids are remapped densely in ascending
/// order. Without `num_classes`, K is the largest class id + 1.
LabelTree load_hierarchy(std::string_view text, std::optional<std::size_t> num_classes = {});

/// Root with K leaf children, in class order.
LabelTree flat_tree(std::size_t num_classes);

/// Recursive balanced 2-means over class profiles until nodes hold at most
/// `max_leaf` classes.
LabelTree build_2means_tree(const std::vector<std::vector<double>>& profiles, std::size_t max_leaf,
                            double eps_c, std::uint64_t seed);

/// Binary Huffman tree; ties merge the subtree with the smallest class id first.
LabelTree build_huffman_tree(std::span<const double> class_frequencies);

/// Random binary tree (random permutation, random split points).
LabelTree random_binary_tree(std::size_t num_classes, std::uint64_t seed);

/// L2-normalized mean feature vector of each class.
std::vector<std::vector<double>> class_profiles(const Dataset& data);

/// Child-given-parent distributions for the internal nodes of a tree.
class NodeModels {
 public:
  virtual ~NodeModels() = default;
  virtual bool has(NodeId v) const = 0;
  /// Writes P(child | v, x) in child order into `out`.
  virtual void child_probs(NodeId v, const SparseVector& x, std::span<double> out) const = 0;
};

/// Fixed (input-independent) child distributions.
class TableNodeModels : public NodeModels {
 public:
  explicit TableNodeModels(std::size_t num_nodes) : probs_(num_nodes) {}

  /// Factors induced from a flat distribution by conditional renormalization
  /// (subtree mass / parent mass; uniform below zero-mass nodes).
  static TableNodeModels induce(const LabelTree& tree, const ClassDist& dist);

  void set(NodeId v, std::vector<double> probs) { probs_.at(v) = std::move(probs); }
  bool has(NodeId v) const override { return v < probs_.size() && !probs_[v].empty(); }
  void child_probs(NodeId v, const SparseVector& x, std::span<double> out) const override;
  std::span<const double> probs(NodeId v) const { return probs_.at(v); }

 private:
  std::vector<std::vector<double>> probs_;
};

/// Throws MissingNodeModel unless every internal node has a model.
void check_node_models(const LabelTree& tree, const NodeModels& models);

/// Chain-rule product along Path(c). Throws UnnormalizedNode if a node on the
/// path does not sum to 1 within 1e-9.
double path_probability(const LabelTree& tree, const TableNodeModels& models, ClassId c);

/// Best-first provider over a label tree: pops the most probable frontier
/// node, expands internal nodes once, and returns leaves. Path
/// probabilities are accumulated as log-probabilities.
class HfProvider : public ClassProvider {
 public:
  HfProvider(const LabelTree& tree, const NodeModels& models, const SparseVector& x);

  std::optional<ScoredClass> next() override;
  std::size_t num_classes() const override { return tree_.num_classes(); }

  std::size_t frontier_size() const { return frontier_.size(); }
  std::size_t node_evaluations() const { return evaluations_; }

 private:
  struct Entry {
    double log_p;
    NodeId node;
  };
  struct Lower {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.log_p != b.log_p) return a.log_p < b.log_p;
      return a.node > b.node;
    }
  };

  const LabelTree& tree_;
  const NodeModels& models_;
  const SparseVector& x_;
  std::vector<Entry> frontier_;  // heap ordered by Lower
  std::vector<double> scratch_;
  std::size_t evaluations_ = 0;
};

}  // namespace svp
