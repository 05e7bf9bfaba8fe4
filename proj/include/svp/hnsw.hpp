#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "svp/distribution.hpp"
#include "svp/linear.hpp"

namespace svp {

enum class HnswSimilarity : std::uint8_t {
  /// Raw inner product between class vectors (non-metric graph).
  inner_product = 0,
  /// L2 in the space augmented with sqrt(phi^2 - ||w||^2), phi = max norm,
  /// which turns MIPS into nearest-neighbour search.
  augmented_l2 = 1,
};

struct HnswParams {
  std::size_t M = 10;
  std::size_t ef_construction = 50;
  /// Level-assignment rate; 0 selects 1/ln(M).
  double level_lambda = 0.0;
  std::uint64_t seed = 42;
  HnswSimilarity similarity = HnswSimilarity::inner_product;

  friend bool operator==(const HnswParams&, const HnswParams&) = default;
};

struct Hit {
  ClassId id;
  double score;
};

/// Memoized class scores w_c . x + b_c for one query. Shared across repeated
/// index queries of the same x (doubling), and counts the dot products done.
class ScoreCache {
 public:
  ScoreCache(const LinearModel& model, const SparseVector& x);

  double score(std::uint32_t c);
  std::size_t dot_products() const { return computed_; }

 private:
  const LinearModel& model_;
  const SparseVector& x_;
  std::vector<double> scores_;
  std::vector<char> known_;
  std::size_t computed_ = 0;
};

/// Layered proximity graph over the rows (and biases) of a LinearModel,
/// queried by inner product. The graph stores ids only; vectors stay in the
/// model. Immutable after build, so queries may run concurrently.
class HnswIndex {
 public:
  static HnswIndex build(const LinearModel& vectors, const HnswParams& params);

  /// Approximate top-k classes by score, descending (ties by id).
  /// `ef` is raised to k when smaller.
  std::vector<Hit> query(const LinearModel& vectors, const SparseVector& x, std::size_t k,
                         std::size_t ef, ScoreCache* cache = nullptr) const;

  void save(std::ostream& os) const;
  static HnswIndex load(std::istream& is);

  std::size_t num_nodes() const { return links_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t num_levels() const { return static_cast<std::size_t>(max_level_ + 1); }
  std::uint32_t entry_point() const { return entry_point_; }
  const HnswParams& params() const { return params_; }
  int level_of(std::uint32_t node) const { return static_cast<int>(links_[node].size()) - 1; }
  /// Neighbours of `node` on `level`, sorted by id.
  std::span<const std::uint32_t> neighbors(std::uint32_t node, int level) const;
  std::size_t max_degree(int level) const { return level == 0 ? 2 * params_.M : params_.M; }

  friend bool operator==(const HnswIndex&, const HnswIndex&) = default;

 private:
  HnswParams params_;
  std::size_t dim_ = 0;
  int max_level_ = -1;
  std::uint32_t entry_point_ = 0;
  // links_[node][level]
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;
};

struct HsgOptions {
  std::size_t k0 = 10;
  /// Candidate-list size for queries; 0 means "use the current k".
  std::size_t ef_search = 0;
};

/// Approximate provider backed by an HnswIndex with the doubling strategy:
/// when the retrieved list runs out, the index is re-queried with twice the
/// previous k and only unseen classes are appended. Masses are
/// exp(score - top score of the first batch).
class HsgProvider : public ClassProvider {
 public:
  HsgProvider(const LinearModel& model, const HnswIndex& index, const SparseVector& x,
              HsgOptions options = {});

  std::optional<ScoredClass> next() override;
  std::size_t num_classes() const override { return model_.num_outputs(); }

  std::span<const ScoredClass> retrieved() const { return retrieved_; }
  std::size_t current_k() const { return current_k_; }
  const std::vector<std::size_t>& query_sizes() const { return query_sizes_; }
  std::size_t dot_products() const { return cache_.dot_products(); }
  /// Entries of a later batch whose mass exceeded the last emitted mass.
  std::size_t late_finds() const { return late_finds_; }

 private:
  bool extend();

  const LinearModel& model_;
  const HnswIndex& index_;
  const SparseVector& x_;
  HsgOptions options_;
  ScoreCache cache_;
  std::vector<ScoredClass> retrieved_;
  std::vector<char> seen_;
  std::vector<std::size_t> query_sizes_;
  std::size_t cursor_ = 0;
  std::size_t current_k_ = 0;
  std::size_t late_finds_ = 0;
  double shift_ = 0.0;
  double last_mass_ = 0.0;
};

}  // namespace svp
