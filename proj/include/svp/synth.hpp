#pragma once

#include <cstdint>
#include <vector>

#include "svp/distribution.hpp"
#include "svp/linear.hpp"
#include "svp/sparse.hpp"

namespace svp {

struct BlobParams {
  std::size_t num_classes = 10;
  std::size_t dim = 16;
  /// Class means are `separation` times random unit vectors.
  double separation = 4.0;
  /// Isotropic per-feature standard deviation.
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian class blobs with uniform class prior and shared isotropic
/// covariance. The Bayes posterior is then a softmax of a linear function,
/// which true_model() returns.
class BlobGenerator {
 public:
  explicit BlobGenerator(const BlobParams& params);

  /// n examples drawn with its own seed; means are fixed by params.seed.
  Dataset sample(std::size_t n, std::uint64_t seed) const;
  /// w_c = mu_c / sigma^2, b_c = -||mu_c||^2 / (2 sigma^2).
  LinearModel true_model() const;

  const BlobParams& params() const { return params_; }
  const std::vector<std::vector<double>>& means() const { return means_; }

 private:
  BlobParams params_;
  std::vector<std::vector<double>> means_;
};

Dataset gaussian_blobs(const BlobParams& params, std::size_t n);

/// n draws from a symmetric Dirichlet(concentration) over K classes.
std::vector<ClassDist> dirichlet_dists(std::size_t num_classes, std::size_t n, std::uint64_t seed,
                                       double concentration = 1.0);

}  // namespace svp
