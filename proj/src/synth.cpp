#include "svp/synth.hpp"

#include <cmath>
#include <random>

#include "svp/error.hpp"

namespace svp {

BlobGenerator::BlobGenerator(const BlobParams& params) : params_(params) {
  if (params.num_classes < 2) throw Error(ErrorCode::InvalidParams, "need at least 2 classes");
  if (params.dim == 0) throw Error(ErrorCode::InvalidParams, "dim must be positive");
  if (!(params.noise > 0.0)) throw Error(ErrorCode::InvalidParams, "noise must be positive");
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  means_.assign(params.num_classes, std::vector<double>(params.dim));
  for (auto& mu : means_) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : mu) {
        v = normal(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    const double scale = params.separation / std::sqrt(norm);
    for (double& v : mu) v *= scale;
  }
}

Dataset BlobGenerator::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, params_.noise);
  std::uniform_int_distribution<std::size_t> pick(0, params_.num_classes - 1);
  Dataset d;
  d.dim = params_.dim;
  d.num_classes = params_.num_classes;
  d.x.reserve(n);
  d.y.reserve(n);
  std::vector<double> dense(params_.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pick(rng);
    for (std::size_t j = 0; j < params_.dim; ++j) dense[j] = means_[c][j] + normal(rng);
    d.x.push_back(SparseVector::from_dense(dense));
    d.y.push_back(static_cast<ClassId>(c));
  }
  return d;
}

LinearModel BlobGenerator::true_model() const {
  LinearModel m(params_.num_classes, params_.dim, true);
  const double inv_var = 1.0 / (params_.noise * params_.noise);
  for (std::size_t c = 0; c < params_.num_classes; ++c) {
    double sq = 0.0;
    auto row = m.row(c);
    for (std::size_t j = 0; j < params_.dim; ++j) {
      row[j] = means_[c][j] * inv_var;
      sq += means_[c][j] * means_[c][j];
    }
    m.bias(c) = -0.5 * sq * inv_var;
  }
  return m;
}

Dataset gaussian_blobs(const BlobParams& params, std::size_t n) {
  return BlobGenerator(params).sample(n, params.seed + 1);
}

std::vector<ClassDist> dirichlet_dists(std::size_t num_classes, std::size_t n, std::uint64_t seed,
                                       double concentration) {
  if (num_classes < 1) throw Error(ErrorCode::InvalidParams, "need at least 1 class");
  if (!(concentration > 0.0)) throw Error(ErrorCode::InvalidParams, "concentration must be positive");
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<ClassDist> out;
  out.reserve(n);
  std::vector<double> m(num_classes);
  while (out.size() < n) {
    double total = 0.0;
    for (double& v : m) {
      v = gamma(rng);
      total += v;
    }
    if (!(total > 0.0)) continue;
    for (double& v : m) v /= total;
    out.push_back(ClassDist::normalized_from(m));
  }
  return out;
}

}  // namespace svp
