#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "svp/distribution.hpp"
#include "svp/sparse.hpp"

namespace svp {

struct TrainingMeta {
  double C = 1.0;
  double eps_l = 1e-6;
  double prune_eta = 0.0;
};

/// Linear scorer with one weight row per output (class or tree child).
///
/// Parameters live in one contiguous block: num_outputs rows of `dim`
/// weights followed by num_outputs biases.
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(std::size_t num_outputs, std::size_t dim, bool has_bias = true);

  std::size_t num_outputs() const { return num_outputs_; }
  std::size_t dim() const { return dim_; }
  bool has_bias() const { return has_bias_; }

  std::span<double> row(std::size_t c) { return {params_.data() + c * dim_, dim_}; }
  std::span<const double> row(std::size_t c) const { return {params_.data() + c * dim_, dim_}; }
  double& bias(std::size_t c) { return params_[num_outputs_ * dim_ + c]; }
  double bias(std::size_t c) const { return has_bias_ ? params_[num_outputs_ * dim_ + c] : 0.0; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<const double> weights() const { return {params_.data(), num_outputs_ * dim_}; }

  TrainingMeta meta;

  std::size_t nonzero_weights() const;
  /// Throws DimensionMismatch if x has an index >= dim().
  void check_input(const SparseVector& x) const;

  friend bool operator==(const LinearModel& a, const LinearModel& b);

 private:
  std::size_t num_outputs_ = 0;
  std::size_t dim_ = 0;
  bool has_bias_ = true;
  std::vector<double> params_;
};

struct TrainOptions {
  double C = 1.0;
  double eps_l = 1e-6;
  std::size_t max_iterations = 500;
  std::uint64_t seed = 0;
  bool bias = true;
  bool parallel = true;
};

/// Regularized cross-entropy sum_i CE_i + ||W||^2 / (2C) and its gradient
/// (same layout as LinearModel::params). Bias is not regularized.
double softmax_objective(const LinearModel& model, const ExampleView& data, double C,
                         std::span<double> gradient, bool parallel = true);

/// Multinomial softmax regression, full-batch L-BFGS. Stops when the
/// relative objective decrease drops below eps_l.
LinearModel train_flat(const Dataset& data, const TrainOptions& options);

/// Same optimizer on an arbitrary view (used for tree nodes).
LinearModel train_softmax(const ExampleView& data, const TrainOptions& options);

/// Zeroes every parameter (biases included) with |w| < eta.
LinearModel prune_weights(const LinearModel& model, double eta);

/// Raw scores w_c . x + b_c.
std::vector<double> predict_scores(const LinearModel& model, const SparseVector& x);

/// Softmax of the scores as a normalized distribution.
ClassDist predict_proba(const LinearModel& model, const SparseVector& x);

}  // namespace svp
