#include "svp/tree_model.hpp"

#include <cmath>

#include "svp/error.hpp"
#include "svp/kernels.hpp"

namespace svp {

void LinearNodeModels::child_probs(NodeId v, const SparseVector& x, std::span<double> out) const {
  const LinearModel& m = model(v);
  kernels::scores_serial(m, x, out);
  kernels::softmax(out);
}

std::size_t LinearNodeModels::nonzero_weights() const {
  std::size_t n = 0;
  for (const auto& m : models_)
    if (m) n += m->nonzero_weights();
  return n;
}

LinearNodeModels train_tree_nodes(const Dataset& data, const LabelTree& tree, const TrainOptions& options) {
  if (tree.num_classes() != data.num_classes) {
    throw Error(ErrorCode::UniverseMismatch, "tree has " + std::to_string(tree.num_classes()) +
                                                 " classes, data has " + std::to_string(data.num_classes));
  }
  if (!(options.C > 0.0)) throw Error(ErrorCode::InvalidParams, "C must be positive");
  data.validate();

  const std::size_t n_nodes = tree.num_nodes();
  std::vector<ExampleView> views(n_nodes);
  for (NodeId v = 0; v < n_nodes; ++v) {
    views[v].dim = data.dim;
    views[v].num_outputs = tree.node(v).children.size();
  }
  // Child position of every non-root node within its parent.
  std::vector<ClassId> position(n_nodes, -1);
  for (NodeId v = 0; v < n_nodes; ++v) {
    const auto& ch = tree.node(v).children;
    for (std::size_t j = 0; j < ch.size(); ++j) position[ch[j]] = static_cast<ClassId>(j);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto path = tree.path(data.y[i]);
    for (std::size_t d = 0; d + 1 < path.size(); ++d) {
      views[path[d]].x.push_back(&data.x[i]);
      views[path[d]].y.push_back(position[path[d + 1]]);
    }
  }

  const auto internal = tree.internal_nodes();
  std::vector<LinearModel> trained(internal.size());
  TrainOptions inner = options;
  inner.parallel = false;

#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < internal.size(); ++t) {
    const ExampleView& view = views[internal[t]];
    const std::size_t m = view.num_outputs;
    std::vector<std::size_t> counts(m, 0);
    for (ClassId y : view.y) ++counts[static_cast<std::size_t>(y)];
    std::size_t covered = 0;
    for (auto c : counts) covered += c > 0;
    if (covered >= 2) {
      trained[t] = train_softmax(view, inner);
    } else {
      LinearModel model(m, data.dim, true);
      model.meta.C = options.C;
      model.meta.eps_l = options.eps_l;
      const double denom = static_cast<double>(view.size() + m);
      for (std::size_t j = 0; j < m; ++j) {
        model.bias(j) = std::log((static_cast<double>(counts[j]) + 1.0) / denom);
      }
      trained[t] = std::move(model);
    }
  }

  LinearNodeModels out(n_nodes);
  for (std::size_t t = 0; t < internal.size(); ++t) out.set(internal[t], std::move(trained[t]));
  return out;
}

LinearNodeModels prune_weights(const LinearNodeModels& models, double eta) {
  LinearNodeModels out(models.num_nodes());
  for (NodeId v = 0; v < models.num_nodes(); ++v) {
    if (models.has(v)) out.set(v, prune_weights(models.model(v), eta));
  }
  return out;
}

}  // namespace svp
