#include "svp/sparse.hpp"

#include "svp/error.hpp"

namespace svp {

SparseVector::SparseVector(std::vector<Feature> features) : features_(std::move(features)) {
  for (std::size_t i = 1; i < features_.size(); ++i) {
    if (features_[i].index <= features_[i - 1].index) {
      throw Error(ErrorCode::NonMonotoneIndices,
                  "feature index " + std::to_string(features_[i].index) + " after " +
                      std::to_string(features_[i - 1].index));
    }
  }
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  std::vector<Feature> f;
  for (std::size_t j = 0; j < dense.size(); ++j) {
    if (dense[j] != 0.0) f.push_back({static_cast<std::uint32_t>(j), dense[j]});
  }
  return SparseVector(std::move(f));
}

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (const auto& f : features_) s += f.value * f.value;
  return s;
}

void Dataset::validate() const {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidParams, "x/y size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= num_classes) {
      throw Error(ErrorCode::InvalidParams, "label out of range at row " + std::to_string(i));
    }
    if (x[i].min_dim() > dim) {
      throw Error(ErrorCode::DimensionMismatch, "feature index out of range at row " +
                                                    std::to_string(i));
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.dim = dim;
  out.num_classes = num_classes;
  out.x.reserve(rows.size());
  out.y.reserve(rows.size());
  for (std::size_t r : rows) {
    out.x.push_back(x.at(r));
    out.y.push_back(y.at(r));
  }
  return out;
}

ExampleView ExampleView::of(const Dataset& data) {
  ExampleView v;
  v.dim = data.dim;
  v.num_outputs = data.num_classes;
  v.y = data.y;
  v.x.reserve(data.size());
  for (const auto& row : data.x) v.x.push_back(&row);
  return v;
}

}  // namespace svp
