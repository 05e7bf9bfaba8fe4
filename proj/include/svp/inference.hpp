#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "svp/distribution.hpp"
#include "svp/utility.hpp"

namespace svp {

inline constexpr std::size_t kMaxBruteForceClasses = 22;

struct SvbopOptions {
  /// Evaluate all K prefix sets instead of stopping at the first strict
  /// decrease. Required for utilities that are not (1/x)-convex.
  bool force_full_scan = false;
};

/// Expected utility g(|pred|) * sum of pred masses. Masses are summed in
/// ascending class-id order.
double expected_utility(const ClassDist& dist, std::span<const ClassId> pred,
                        const UtilitySpec& spec);

/// Set-valued Bayes-optimal prediction over a class provider.
///
/// Holds a utility validated for a fixed class count together with its g
/// table, so it can be reused across queries and threads. Construction
/// rejects utilities that are not defined on every size, and (unless
/// force_full_scan) utilities that are not decreasing and (1/x)-convex,
/// since early stopping is only exact for those.
class SetPredictor {
 public:
  SetPredictor(const UtilitySpec& spec, std::size_t num_classes, SvbopOptions options = {});

  PredictionSet predict(ClassProvider& provider) const;

  const UtilitySpec& utility() const { return spec_; }
  std::size_t num_classes() const { return g_.size(); }
  bool early_stopping() const { return !options_.force_full_scan; }

 private:
  UtilitySpec spec_;
  SvbopOptions options_;
  std::vector<double> g_;
};

/// One-shot form of SetPredictor::predict.
PredictionSet svbop(ClassProvider& provider, const UtilitySpec& spec, SvbopOptions options = {});

/// Exhaustive argmax over all non-empty subsets (K <= 22). Ties go to the
/// larger cumulative mass, then to the lexicographically smallest ascending
/// id list. The returned classes are listed in mass_order.
PredictionSet brute_force_bayes(const ClassDist& dist, const UtilitySpec& spec);

/// U of the mass-sorted prefixes of sizes 1..K.
std::vector<double> prefix_utility_curve(const ClassDist& dist, const UtilitySpec& spec);

PredictionSet top_s_predict(const ClassDist& dist, std::size_t s);

/// Smallest mass-sorted prefix whose cumulative mass reaches theta.
/// theta >= 1 returns every class.
PredictionSet threshold_predict(const ClassDist& dist, double theta);

struct Regret {
  double regret;
  double l1;
};

/// Regret of predicting with `est_dist` when `true_dist` holds, and the L1
/// distance between them. Throws InvariantViolation if regret > 2 * l1.
Regret compute_regret(const ClassDist& true_dist, const ClassDist& est_dist,
                      const UtilitySpec& spec);

}  // namespace svp
