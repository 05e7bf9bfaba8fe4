#include "svp/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "svp/error.hpp"

namespace svp {

ClassDist::ClassDist(std::vector<double> masses) : masses_(std::move(masses)) {
  for (double m : masses_) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorCode::InvalidParams, "class masses must be finite and non-negative");
    }
  }
  normalized_ = std::fabs(total() - 1.0) <= kNormalizationTolerance;
}

ClassDist ClassDist::normalized_from(std::vector<double> masses) {
  ClassDist d(std::move(masses));
  if (!d.normalized_) {
    throw Error(ErrorCode::InvalidParams,
                "masses sum to " + std::to_string(d.total()) + ", expected 1");
  }
  return d;
}

double ClassDist::mass(ClassId c) const {
  if (c < 0 || static_cast<std::size_t>(c) >= masses_.size()) return 0.0;
  return masses_[static_cast<std::size_t>(c)];
}

double ClassDist::total() const { return std::accumulate(masses_.begin(), masses_.end(), 0.0); }

std::vector<ScoredClass> ClassDist::sorted() const {
  std::vector<ScoredClass> out;
  out.reserve(masses_.size());
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    out.push_back({static_cast<ClassId>(i), masses_[i]});
  }
  std::sort(out.begin(), out.end(), mass_order);
  return out;
}

ClassDist ClassDist::scaled(double factor) const {
  std::vector<double> m = masses_;
  for (double& v : m) v *= factor;
  return ClassDist(std::move(m));
}

bool PredictionSet::contains(ClassId c) const {
  return std::find(classes.begin(), classes.end(), c) != classes.end();
}

SortedListProvider::SortedListProvider(std::vector<ScoredClass> entries)
    : queue_(std::move(entries)) {
  std::sort(queue_.begin(), queue_.end(), mass_order);
}

SortedListProvider SortedListProvider::from_dist(const ClassDist& dist) {
  return SortedListProvider(dist.sorted());
}

std::optional<ScoredClass> SortedListProvider::next() {
  if (cursor_ >= queue_.size()) return std::nullopt;
  return queue_[cursor_++];
}

}  // namespace svp
