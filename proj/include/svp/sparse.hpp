#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "svp/utility.hpp"

namespace svp {

struct Feature {
  std::uint32_t index;
  double value;

  friend bool operator==(const Feature&, const Feature&) = default;
};

/// Sparse feature vector with strictly increasing indices.
class SparseVector {
 public:
  SparseVector() = default;
  /// Throws NonMonotoneIndices if indices are not strictly increasing.
  explicit SparseVector(std::vector<Feature> features);

  static SparseVector from_dense(std::span<const double> dense);

  std::span<const Feature> features() const { return features_; }
  std::size_t nnz() const { return features_.size(); }
  bool empty() const { return features_.empty(); }
  /// Smallest dimension that holds every index (max index + 1).
  std::size_t min_dim() const { return features_.empty() ? 0 : features_.back().index + 1; }
  double squared_norm() const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<Feature> features_;
};

struct Dataset {
  std::vector<SparseVector> x;
  std::vector<ClassId> y;
  std::size_t dim = 0;
  std::size_t num_classes = 0;

  std::size_t size() const { return x.size(); }
  /// Throws InvalidParams when labels or indices fall outside the declared ranges.
  void validate() const;
  /// Rows with the given indices, same dim and class universe.
  Dataset subset(std::span<const std::size_t> rows) const;
};

/// A set of training examples referencing rows owned elsewhere, with labels
/// in 0..num_outputs-1 (class ids, or child positions for tree nodes).
struct ExampleView {
  std::vector<const SparseVector*> x;
  std::vector<ClassId> y;
  std::size_t dim = 0;
  std::size_t num_outputs = 0;

  std::size_t size() const { return x.size(); }
  static ExampleView of(const Dataset& data);
};

}  // namespace svp
