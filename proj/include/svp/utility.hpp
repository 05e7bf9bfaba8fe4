#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace svp {

using ClassId = std::int32_t;

enum class UtilityKind {
  precision,
  recall,
  fbeta,
  credal,
  exponential,
  logarithmic,
  reject,
  gen_reject,
};

const char* to_string(UtilityKind kind);

struct UtilityParams {
  double beta = 1.0;   // fbeta, gen_reject
  double delta = 0.0;  // credal, exponential
  double gamma = 0.0;  // credal
  double alpha = 0.0;  // reject, gen_reject
};

// Relative tolerance used by the sequence-property checkers.
inline constexpr double kSequenceTolerance = 1e-12;

/// A member of the set-based utility family u(c, Y) = [c in Y] * g(|Y|).
///
/// Instances are validated on construction and immutable afterwards, so a
/// single spec can be shared by any number of concurrent predictors.
class UtilitySpec {
 public:
  static UtilitySpec precision(std::optional<std::size_t> k = {});
  static UtilitySpec recall(std::optional<std::size_t> k = {});
  static UtilitySpec fbeta(double beta, std::optional<std::size_t> k = {});
  static UtilitySpec credal(double delta, double gamma, std::optional<std::size_t> k = {});
  static UtilitySpec exponential(double delta, std::optional<std::size_t> k = {});
  static UtilitySpec logarithmic(std::optional<std::size_t> k = {});
  static UtilitySpec reject(double alpha, std::size_t k);
  static UtilitySpec gen_reject(double alpha, double beta, std::size_t k);

  /// Parses `kind[:param=value,...]`, e.g. `fbeta:beta=1` or
  /// `genreject:alpha=0.9,beta=2`. gen_reject and reject need `k`.
  static UtilitySpec parse(std::string_view text, std::optional<std::size_t> k = {});

  UtilitySpec(UtilityKind kind, UtilityParams params, std::optional<std::size_t> k);

  UtilityKind kind() const { return kind_; }
  const UtilityParams& params() const { return params_; }
  std::optional<std::size_t> num_classes() const { return k_; }
  double scale() const { return scale_; }

  /// Copy bound to a class count; re-validates.
  UtilitySpec with_num_classes(std::size_t k) const;

  /// g(s), closed form. Throws SizeOutOfRange, UndefinedAtSize.
  double g(std::size_t s) const;

  /// u(c, pred): 0 if c is not in pred, g(|pred|) otherwise.
  double u(ClassId true_class, std::span<const ClassId> pred) const;

  /// Canonical text form accepted by parse().
  std::string to_string() const;

  /// Table g(1..k); entry i holds g(i + 1), bit-identical to g().
  std::vector<double> table(std::size_t k) const;

  /// True when g is defined for every size 1..k (false only for reject).
  bool defined_on_all_sizes() const { return kind_ != UtilityKind::reject; }

  friend bool operator==(const UtilitySpec& a, const UtilitySpec& b);

 private:
  friend UtilitySpec normalized(const UtilitySpec& spec);
  double raw_g(std::size_t s) const;
  void validate() const;

  UtilityKind kind_;
  UtilityParams params_;
  std::optional<std::size_t> k_;
  double scale_ = 1.0;
};

/// Rescaled copy with g(s) / g(1), so that g(1) = 1.
UtilitySpec normalized(const UtilitySpec& spec);

double eval_g(const UtilitySpec& spec, std::size_t s);
double eval_u(const UtilitySpec& spec, ClassId true_class, std::span<const ClassId> pred);

bool is_strictly_decreasing(const UtilitySpec& spec, std::size_t k);
bool is_one_over_x_convex(const UtilitySpec& spec, std::size_t k);
bool is_concave(const UtilitySpec& spec, std::size_t k);
bool dominates_precision(const UtilitySpec& spec, std::size_t k);

struct GenRejectRegion {
  double alpha_max;
  double beta_min;
};

/// Parameter region of g_{alpha,beta} that stays above precision for k classes.
GenRejectRegion gen_reject_admissible_region(std::size_t k);

}  // namespace svp
