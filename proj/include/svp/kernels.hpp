#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; the parallel versions partition work so that every output
// element is accumulated in the same order as the reference, which makes
// both bit-identical.

#include <cstddef>
#include <span>

#include "svp/sparse.hpp"

namespace svp {
class LinearModel;
}

namespace svp::kernels {

double sparse_dot(std::span<const double> row, const SparseVector& x);

/// out[c] = w_c . x + b_c
void scores_serial(const LinearModel& model, const SparseVector& x, std::span<double> out);
void scores_parallel(const LinearModel& model, const SparseVector& x, std::span<double> out);

/// out[i * K + c] for every row of `xs`.
void batch_scores_serial(const LinearModel& model, std::span<const SparseVector> xs,
                         std::span<double> out);
void batch_scores_parallel(const LinearModel& model, std::span<const SparseVector> xs,
                           std::span<double> out);

/// In-place max-shifted softmax.
void softmax(std::span<double> scores);

/// Cross-entropy sum and gradient w.r.t. the model parameters (no
/// regularizer). `gradient` is overwritten.
double cross_entropy_gradient_serial(const LinearModel& model, const ExampleView& data,
                                     std::span<double> gradient);
double cross_entropy_gradient_parallel(const LinearModel& model, const ExampleView& data,
                                       std::span<double> gradient);

/// Number of OpenMP threads in use (1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace svp::kernels
