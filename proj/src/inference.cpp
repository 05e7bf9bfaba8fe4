#include "svp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "svp/error.hpp"

namespace svp {

double expected_utility(const ClassDist& dist, std::span<const ClassId> pred,
                        const UtilitySpec& spec) {
  if (pred.empty()) throw Error(ErrorCode::EmptyPrediction, "prediction set is empty");
  std::vector<ClassId> ids(pred.begin(), pred.end());
  std::sort(ids.begin(), ids.end());
  double mass = 0.0;
  for (ClassId c : ids) mass += dist.mass(c);
  return spec.g(ids.size()) * mass;
}

SetPredictor::SetPredictor(const UtilitySpec& spec, std::size_t num_classes, SvbopOptions options)
    : spec_(spec.num_classes() ? spec : spec.with_num_classes(num_classes)), options_(options) {
  if (num_classes == 0) throw Error(ErrorCode::EmptyInput, "no classes");
  if (spec_.num_classes() && *spec_.num_classes() < num_classes) {
    throw Error(ErrorCode::InvalidParams, "utility bound to fewer classes than the problem");
  }
  if (!spec_.defined_on_all_sizes()) {
    throw Error(ErrorCode::UtilityNotSupported,
                spec_.to_string() + " is not defined on every set size; use genreject");
  }
  if (!options_.force_full_scan) {
    if (!is_strictly_decreasing(spec_, num_classes) || !is_one_over_x_convex(spec_, num_classes)) {
      throw Error(ErrorCode::UtilityNotSupported,
                  spec_.to_string() +
                      " is not strictly decreasing and (1/x)-convex; early stopping would not be "
                      "exact (use force_full_scan)");
    }
  }
  g_ = spec_.table(num_classes);
}

PredictionSet SetPredictor::predict(ClassProvider& provider) const {
  PredictionSet best;
  double best_u = 0.0;
  double cum = 0.0;
  double last_mass = 0.0;
  std::vector<ClassId> current;
  current.reserve(16);
  std::size_t best_size = 0;
  double best_mass = 0.0;
  std::size_t steps = 0;

  while (auto next = provider.next()) {
    ++steps;
    if (steps > g_.size()) {
      throw Error(ErrorCode::InvariantViolation, "provider emitted more classes than K");
    }
    if (steps > 1 && next->mass > last_mass) {
      std::ostringstream os;
      os << "mass " << next->mass << " after " << last_mass;
      throw Error(ErrorCode::NonMonotoneProvider, os.str());
    }
    last_mass = next->mass;
    current.push_back(next->id);
    cum += next->mass;
    const double u = cum * g_[current.size() - 1];
    if (best_u <= u) {
      best_u = u;
      best_size = current.size();
      best_mass = cum;
    } else if (!options_.force_full_scan) {
      break;
    }
  }
  if (steps == 0) throw Error(ErrorCode::ProviderExhaustedEarly, "provider returned no class");

  best.classes.assign(current.begin(), current.begin() + static_cast<std::ptrdiff_t>(best_size));
  best.cum_mass = best_mass;
  best.utility_value = best_u;
  best.steps_queried = steps;
  return best;
}

PredictionSet svbop(ClassProvider& provider, const UtilitySpec& spec, SvbopOptions options) {
  SetPredictor predictor(spec, provider.num_classes(), options);
  return predictor.predict(provider);
}

PredictionSet brute_force_bayes(const ClassDist& dist, const UtilitySpec& spec) {
  const std::size_t k = dist.num_classes();
  if (k == 0) throw Error(ErrorCode::EmptyInput, "empty distribution");
  if (k > kMaxBruteForceClasses) {
    throw Error(ErrorCode::UniverseTooLarge,
                std::to_string(k) + " classes exceeds the brute-force limit of " +
                    std::to_string(kMaxBruteForceClasses));
  }
  const auto masses = dist.masses();
  std::vector<double> g(k);
  for (std::size_t s = 1; s <= k; ++s) g[s - 1] = spec.g(s);

  // Lexicographic order of ascending id lists: compare the sorted member
  // lists element-wise; a proper prefix is smaller.
  auto lex_less = [k](std::uint32_t a, std::uint32_t b) {
    for (std::size_t i = 0; i < k; ++i) {
      const bool in_a = (a >> i) & 1u;
      const bool in_b = (b >> i) & 1u;
      if (in_a == in_b) continue;
      // First difference at id i: the list holding i is smaller unless the
      // other list has already ended (then the other one is a prefix).
      if (in_a) return (b >> i) != 0;
      return (a >> i) == 0;
    }
    return false;
  };

  std::uint32_t best_mask = 0;
  double best_u = -1.0;
  double best_mass = -1.0;
  const std::uint32_t end = std::uint32_t{1} << k;
  for (std::uint32_t mask = 1; mask < end; ++mask) {
    double mass = 0.0;
    std::size_t size = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if ((mask >> i) & 1u) {
        mass += masses[i];
        ++size;
      }
    }
    const double u = g[size - 1] * mass;
    bool better = false;
    if (u > best_u) better = true;
    else if (u == best_u) {
      if (mass > best_mass) better = true;
      else if (mass == best_mass && lex_less(mask, best_mask)) better = true;
    }
    if (better) {
      best_mask = mask;
      best_u = u;
      best_mass = mass;
    }
  }

  PredictionSet out;
  std::vector<ScoredClass> members;
  for (std::size_t i = 0; i < k; ++i) {
    if ((best_mask >> i) & 1u) members.push_back({static_cast<ClassId>(i), masses[i]});
  }
  std::sort(members.begin(), members.end(), mass_order);
  for (const auto& m : members) out.classes.push_back(m.id);
  out.cum_mass = best_mass;
  out.utility_value = best_u;
  out.steps_queried = 0;
  return out;
}

std::vector<double> prefix_utility_curve(const ClassDist& dist, const UtilitySpec& spec) {
  const auto order = dist.sorted();
  std::vector<double> curve;
  curve.reserve(order.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum += order[i].mass;
    curve.push_back(cum * spec.g(i + 1));
  }
  return curve;
}

namespace {

PredictionSet prefix_set(const std::vector<ScoredClass>& order, std::size_t s) {
  PredictionSet out;
  for (std::size_t i = 0; i < s; ++i) {
    out.classes.push_back(order[i].id);
    out.cum_mass += order[i].mass;
  }
  out.steps_queried = s;
  return out;
}

}  // namespace

PredictionSet top_s_predict(const ClassDist& dist, std::size_t s) {
  if (s == 0 || s > dist.num_classes()) {
    throw Error(ErrorCode::SizeOutOfRange,
                "s=" + std::to_string(s) + " with K=" + std::to_string(dist.num_classes()));
  }
  return prefix_set(dist.sorted(), s);
}

PredictionSet threshold_predict(const ClassDist& dist, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::ThetaOutOfRange, "theta=" + std::to_string(theta));
  }
  const auto order = dist.sorted();
  if (order.empty()) throw Error(ErrorCode::EmptyInput, "empty distribution");
  if (theta >= 1.0) return prefix_set(order, order.size());
  double cum = 0.0;
  std::size_t s = 0;
  while (s < order.size()) {
    cum += order[s].mass;
    ++s;
    if (cum >= theta) break;
  }
  return prefix_set(order, std::max<std::size_t>(s, 1));
}

Regret compute_regret(const ClassDist& true_dist, const ClassDist& est_dist,
                      const UtilitySpec& spec) {
  if (true_dist.num_classes() != est_dist.num_classes()) {
    throw Error(ErrorCode::UniverseMismatch, "distributions over different class universes");
  }
  const PredictionSet optimal = brute_force_bayes(true_dist, spec);
  const PredictionSet plugin = brute_force_bayes(est_dist, spec);
  const double achieved = expected_utility(true_dist, plugin.classes, spec);
  const double best = expected_utility(true_dist, optimal.classes, spec);
  Regret r{best - achieved, 0.0};
  for (std::size_t c = 0; c < true_dist.num_classes(); ++c) {
    r.l1 += std::fabs(true_dist.masses()[c] - est_dist.masses()[c]);
  }
  if (r.regret > 2.0 * r.l1 + 1e-12) {
    std::ostringstream os;
    os << "regret " << r.regret << " exceeds 2*L1 = " << 2.0 * r.l1;
    throw Error(ErrorCode::InvariantViolation, os.str());
  }
  return r;
}

}  // namespace svp
