#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "svp/utility.hpp"

namespace svp {

inline constexpr double kNormalizationTolerance = 1e-9;

struct ScoredClass {
  ClassId id;
  double mass;

  friend bool operator==(const ScoredClass&, const ScoredClass&) = default;
};

/// Descending mass, ties broken by ascending class id.
inline bool mass_order(const ScoredClass& a, const ScoredClass& b) {
  if (a.mass != b.mass) return a.mass > b.mass;
  return a.id < b.id;
}

/// Masses over the dense class universe 0..K-1. Masses may be unnormalized.
class ClassDist {
 public:
  ClassDist() = default;
  explicit ClassDist(std::vector<double> masses);

  /// Builds a dist and requires that masses sum to 1 within 1e-9.
  static ClassDist normalized_from(std::vector<double> masses);

  std::size_t num_classes() const { return masses_.size(); }
  double mass(ClassId c) const;
  std::span<const double> masses() const { return masses_; }
  double total() const;
  bool is_normalized() const { return normalized_; }

  /// Entries sorted by mass_order.
  std::vector<ScoredClass> sorted() const;

  /// Copy with every mass multiplied by `factor` (> 0).
  ClassDist scaled(double factor) const;

 private:
  std::vector<double> masses_;
  bool normalized_ = false;
};

struct PredictionSet {
  std::vector<ClassId> classes;
  double cum_mass = 0.0;
  double utility_value = std::numeric_limits<double>::quiet_NaN();
  std::size_t steps_queried = 0;

  std::size_t size() const { return classes.size(); }
  bool contains(ClassId c) const;
};

/// Streams classes in non-increasing mass order, each id at most once.
/// Construction performs the per-query initialization; instances are
/// single-consumer.
class ClassProvider {
 public:
  virtual ~ClassProvider() = default;
  virtual std::optional<ScoredClass> next() = 0;
  virtual std::size_t num_classes() const = 0;
};

/// A provider over a fully materialized, sorted list of classes.
class SortedListProvider : public ClassProvider {
 public:
  /// Sorts `entries` by mass_order.
  explicit SortedListProvider(std::vector<ScoredClass> entries);

  static SortedListProvider from_dist(const ClassDist& dist);

  std::optional<ScoredClass> next() override;
  std::size_t num_classes() const override { return queue_.size(); }

  std::span<const ScoredClass> queue() const { return queue_; }
  std::size_t cursor() const { return cursor_; }

 private:
  std::vector<ScoredClass> queue_;
  std::size_t cursor_ = 0;
};

}  // namespace svp
