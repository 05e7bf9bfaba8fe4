#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "svp/hnsw.hpp"
#include "svp/label_tree.hpp"
#include "svp/linear.hpp"
#include "svp/svmlight.hpp"
#include "svp/tree_model.hpp"

namespace svp {

inline constexpr int kBundleVersion = 1;

/// Everything a prediction run needs. Stored as a directory:
///
///   manifest.json  version, dim, K, kind, file list, training metadata
///   weights.bin    weight blocks (layout below)
///   labels.txt     raw label of each dense class id
///   tree.txt       label tree (tree bundles only)
///   index.hnsw     HNSW graph over the flat weights (optional)
///
/// weights.bin, all little-endian:
///   "SVPWGT\0\0" u32 version u32 block_count
///   per block: u32 node (0xffffffff for the flat model) u32 outputs u64 dim
///              u8 has_bias f64 C f64 eps_l f64 prune_eta
///              f64 params[outputs * dim + outputs]
struct ModelBundle {
  std::optional<LinearModel> flat;
  std::optional<LabelTree> tree;
  LinearNodeModels nodes;
  std::optional<HnswIndex> index;
  LabelMap labels;

  std::size_t dim() const;
  std::size_t num_classes() const { return labels.num_classes(); }
  std::string kind() const;

  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

void write_weights(std::ostream& os, const ModelBundle& bundle);
void read_weights(std::istream& is, ModelBundle& bundle);

void save_bundle(const ModelBundle& bundle, const std::string& dir);
ModelBundle load_bundle(const std::string& dir);

}  // namespace svp
