#include "svp/provider_full.hpp"

#include <algorithm>
#include <cmath>

#include "svp/kernels.hpp"

namespace svp {

std::vector<double> full_masses(const LinearModel& model, const SparseVector& x, bool normalize) {
  std::vector<double> s = predict_scores(model, x);
  if (normalize) {
    kernels::softmax(s);
    return s;
  }
  const double mx = *std::max_element(s.begin(), s.end());
  for (double& v : s) v = std::exp(v - mx);
  return s;
}

SortedListProvider full_init(const LinearModel& model, const SparseVector& x, bool normalize) {
  const auto masses = full_masses(model, x, normalize);
  std::vector<ScoredClass> entries(masses.size());
  for (std::size_t c = 0; c < masses.size(); ++c) entries[c] = {static_cast<ClassId>(c), masses[c]};
  return SortedListProvider(std::move(entries));
}

}  // namespace svp
