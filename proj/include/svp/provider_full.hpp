#pragma once

#include "svp/distribution.hpp"
#include "svp/linear.hpp"

namespace svp {

/// Exact provider: scores all K classes (K dot products), sorts once and
/// streams them. With `normalize` the masses are the softmax; otherwise
/// exp(score - max score), which has the same order and ratios.
SortedListProvider full_init(const LinearModel& model, const SparseVector& x, bool normalize);

/// Masses for full_init, exposed for batch use.
std::vector<double> full_masses(const LinearModel& model, const SparseVector& x, bool normalize);

}  // namespace svp
