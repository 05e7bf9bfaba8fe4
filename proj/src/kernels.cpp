#include "svp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "svp/linear.hpp"

namespace svp::kernels {

double sparse_dot(std::span<const double> row, const SparseVector& x) {
  double s = 0.0;
  for (const auto& f : x.features()) s += row[f.index] * f.value;
  return s;
}

void scores_serial(const LinearModel& model, const SparseVector& x, std::span<double> out) {
  const std::size_t k = model.num_outputs();
  for (std::size_t c = 0; c < k; ++c) out[c] = sparse_dot(model.row(c), x) + model.bias(c);
}

void scores_parallel(const LinearModel& model, const SparseVector& x, std::span<double> out) {
  const auto k = static_cast<std::ptrdiff_t>(model.num_outputs());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    out[cu] = sparse_dot(model.row(cu), x) + model.bias(cu);
  }
}

void batch_scores_serial(const LinearModel& model, std::span<const SparseVector> xs,
                         std::span<double> out) {
  const std::size_t k = model.num_outputs();
  for (std::size_t i = 0; i < xs.size(); ++i) scores_serial(model, xs[i], out.subspan(i * k, k));
}

void batch_scores_parallel(const LinearModel& model, std::span<const SparseVector> xs,
                           std::span<double> out) {
  const std::size_t k = model.num_outputs();
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    scores_serial(model, xs[iu], out.subspan(iu * k, k));
  }
}

void softmax(std::span<double> scores) {
  if (scores.empty()) return;
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    z += s;
  }
  for (double& s : scores) s /= z;
}

namespace {

// Scores of one example turned into residuals p_c - [c == y]; returns the
// example's cross-entropy.
double example_residuals(const LinearModel& model, const SparseVector& x, ClassId y,
                         std::span<double> r) {
  scores_serial(model, x, r);
  const double mx = *std::max_element(r.begin(), r.end());
  const double sy = r[static_cast<std::size_t>(y)];
  double z = 0.0;
  for (double& s : r) {
    s = std::exp(s - mx);
    z += s;
  }
  for (double& s : r) s /= z;
  r[static_cast<std::size_t>(y)] -= 1.0;
  return mx + std::log(z) - sy;
}

}  // namespace

double cross_entropy_gradient_serial(const LinearModel& model, const ExampleView& data,
                                     std::span<double> gradient) {
  const std::size_t k = model.num_outputs();
  const std::size_t d = model.dim();
  std::fill(gradient.begin(), gradient.end(), 0.0);
  std::vector<double> r(k);
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    loss += example_residuals(model, *data.x[i], data.y[i], r);
    for (std::size_t c = 0; c < k; ++c) {
      double* g = gradient.data() + c * d;
      for (const auto& f : data.x[i]->features()) g[f.index] += r[c] * f.value;
      if (model.has_bias()) gradient[k * d + c] += r[c];
    }
  }
  return loss;
}

double cross_entropy_gradient_parallel(const LinearModel& model, const ExampleView& data,
                                       std::span<double> gradient) {
  const std::size_t k = model.num_outputs();
  const std::size_t d = model.dim();
  const std::size_t n = data.size();
  std::vector<double> residuals(n * k);
  std::vector<double> losses(n);

  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < ni; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    losses[iu] = example_residuals(model, *data.x[iu], data.y[iu],
                                   std::span<double>(residuals).subspan(iu * k, k));
  }

  std::fill(gradient.begin(), gradient.end(), 0.0);
  const auto ki = static_cast<std::ptrdiff_t>(k);
  const bool bias = model.has_bias();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < ki; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    double* g = gradient.data() + cu * d;
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double rc = residuals[i * k + cu];
      for (const auto& f : data.x[i]->features()) g[f.index] += rc * f.value;
      gb += rc;
    }
    if (bias) gradient[k * d + cu] = gb;
  }

  double loss = 0.0;
  for (double l : losses) loss += l;
  return loss;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace svp::kernels
