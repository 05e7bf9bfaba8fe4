#pragma once

#include <optional>
#include <vector>

#include "svp/label_tree.hpp"
#include "svp/linear.hpp"

namespace svp {

/// One softmax over children per internal node, indexed by node id.
class LinearNodeModels : public NodeModels {
 public:
  LinearNodeModels() = default;
  explicit LinearNodeModels(std::size_t num_nodes) : models_(num_nodes) {}

  bool has(NodeId v) const override { return v < models_.size() && models_[v].has_value(); }
  void child_probs(NodeId v, const SparseVector& x, std::span<double> out) const override;

  void set(NodeId v, LinearModel m) { models_.at(v) = std::move(m); }
  const LinearModel& model(NodeId v) const { return *models_.at(v); }
  std::size_t num_nodes() const { return models_.size(); }
  std::size_t nonzero_weights() const;

  friend bool operator==(const LinearNodeModels& a, const LinearNodeModels& b) { return a.models_ == b.models_; }

 private:
  std::vector<std::optional<LinearModel>> models_;
};

/// Trains every internal node on the examples routed through it, with the
/// child on the path as the target. Nodes are independent and trained in
/// parallel. A node whose routed data covers fewer than two children gets
/// zero weights and biases log((n_j + 1) / (n + m)) over its m children.
LinearNodeModels train_tree_nodes(const Dataset& data, const LabelTree& tree, const TrainOptions& options);

LinearNodeModels prune_weights(const LinearNodeModels& models, double eta);

}  // namespace svp
