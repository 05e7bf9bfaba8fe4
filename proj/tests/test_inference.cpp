#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "svp/error.hpp"
#include "svp/inference.hpp"
#include "svp/synth.hpp"

using namespace svp;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an svp::Error");
  return ErrorCode::InvariantViolation;
}

// Independent exhaustive maximum of g(|Y|) * P(Y) over non-empty subsets.
double subset_max(const ClassDist& d, const UtilitySpec& spec) {
  const std::size_t k = d.num_classes();
  double best = -1.0;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    double mass = 0.0;
    std::size_t size = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (mask >> c & 1u) {
        mass += d.masses()[c];
        ++size;
      }
    }
    best = std::max(best, spec.g(size) * mass);
  }
  return best;
}

PredictionSet run(const ClassDist& d, const UtilitySpec& spec, SvbopOptions opt = {}) {
  auto p = SortedListProvider::from_dist(d);
  return svbop(p, spec, opt);
}

std::vector<UtilitySpec> grid_utilities(std::size_t k) {
  return {UtilitySpec::precision(k),        UtilitySpec::fbeta(1.0, k),        UtilitySpec::fbeta(5.0, k),
          UtilitySpec::credal(1.6, 0.6, k), UtilitySpec::credal(2.2, 1.2, k),
          UtilitySpec::gen_reject(static_cast<double>(k - 1) / static_cast<double>(k), 2.0, k)};
}

// A provider that breaks the ordering contract.
class ScriptedProvider : public ClassProvider {
 public:
  ScriptedProvider(std::vector<ScoredClass> s, std::size_t k) : s_(std::move(s)), k_(k) {}
  std::optional<ScoredClass> next() override {
    if (i_ == s_.size()) return std::nullopt;
    return s_[i_++];
  }
  std::size_t num_classes() const override { return k_; }

 private:
  std::vector<ScoredClass> s_;
  std::size_t k_;
  std::size_t i_ = 0;
};

}  // namespace

TEST_CASE("expected utility") {
  std::vector<double> m(100, 0.0);
  for (int i = 0; i < 10; ++i) m[static_cast<std::size_t>(i)] = 0.1;
  const auto d = ClassDist::normalized_from(m);
  const std::vector<ClassId> ten{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<ClassId> one{4};
  CHECK(expected_utility(d, ten, UtilitySpec::precision()) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(expected_utility(d, one, UtilitySpec::precision()) == doctest::Approx(0.1).epsilon(1e-14));

  const auto d3 = ClassDist::normalized_from({0.0, 0.6, 0.3, 0.1});
  const std::vector<ClassId> pair{1, 2};
  CHECK(expected_utility(d3, pair, UtilitySpec::fbeta(1.0)) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(code_of([&] { expected_utility(d3, std::span<const ClassId>{}, UtilitySpec::fbeta(1.0)); }) ==
        ErrorCode::EmptyPrediction);
}

TEST_CASE("svbop examples") {
  auto point = ClassDist::normalized_from({0.0, 1.0, 0.0, 0.0});
  auto r = run(point, UtilitySpec::fbeta(1.0));
  CHECK(r.classes == std::vector<ClassId>{1});
  CHECK(r.utility_value == 1.0);

  std::vector<double> m(11, 0.0);
  m[1] = m[2] = 0.5;
  auto half = ClassDist::normalized_from(m);
  r = run(half, UtilitySpec::fbeta(1.0));
  CHECK(r.classes == std::vector<ClassId>{1, 2});
  CHECK(r.utility_value == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(subset_max(half, UtilitySpec::fbeta(1.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  auto d3 = ClassDist::normalized_from({0.0, 0.6, 0.3, 0.1});
  auto credal = UtilitySpec::credal(2.2, 1.2);
  r = run(d3, credal);
  CHECK(std::fabs(r.utility_value - subset_max(d3, credal)) <= 1e-12);
  CHECK(std::fabs(r.utility_value - brute_force_bayes(d3, credal).utility_value) <= 1e-12);
}

TEST_CASE("svbop errors and guards") {
  ScriptedProvider empty({}, 3);
  CHECK(code_of([&] { svbop(empty, UtilitySpec::precision()); }) == ErrorCode::ProviderExhaustedEarly);
  ScriptedProvider rising({{0, 0.2}, {1, 0.5}, {2, 0.3}}, 3);
  CHECK(code_of([&] { svbop(rising, UtilitySpec::fbeta(1.0)); }) == ErrorCode::NonMonotoneProvider);
  // Not (1/x)-convex: refused unless the full scan is requested.
  CHECK(code_of([] { SetPredictor(UtilitySpec::gen_reject(0.9, 0.5, 100), 100); }) ==
        ErrorCode::UtilityNotSupported);
  CHECK(code_of([] { SetPredictor(UtilitySpec::recall(), 5); }) == ErrorCode::UtilityNotSupported);
  CHECK(code_of([&] { SetPredictor(UtilitySpec::reject(0.2, 4), 4); }) == ErrorCode::UtilityNotSupported);
  auto bad = UtilitySpec::gen_reject(0.9, 0.2, 12);
  CHECK_FALSE(is_one_over_x_convex(bad, 12));
  for (const auto& d : dirichlet_dists(12, 50, 9)) {
    auto r = run(d, bad, {.force_full_scan = true});
    CHECK(std::fabs(r.utility_value - subset_max(d, bad)) <= 1e-12);
  }
}

TEST_CASE("tie policy prefers the larger set") {
  // Precision: every prefix of a uniform distribution has the same utility.
  auto d = ClassDist::normalized_from({0.25, 0.25, 0.25, 0.25});
  auto r = run(d, UtilitySpec::precision());
  CHECK(r.size() == 4);
  CHECK(r.steps_queried == 4);
}

TEST_CASE("brute force") {
  auto r = brute_force_bayes(ClassDist::normalized_from({1.0}), UtilitySpec::precision());
  CHECK(r.classes == std::vector<ClassId>{0});
  CHECK(code_of([] { brute_force_bayes(ClassDist(std::vector<double>(23, 1.0 / 23)), UtilitySpec::precision()); }) ==
        ErrorCode::UniverseTooLarge);

  // Uniform over 10 with F5: every size-s set has utility g(s)*s/10, the
  // oracle picks the best size.
  auto uni = ClassDist(std::vector<double>(10, 0.1));
  auto f5 = UtilitySpec::fbeta(5.0);
  auto b = brute_force_bayes(uni, f5);
  double best = 0.0;
  std::size_t best_s = 0;
  for (std::size_t s = 1; s <= 10; ++s) {
    const double u = f5.g(s) * 0.1 * static_cast<double>(s);
    if (u > best) best = u, best_s = s;
  }
  CHECK(b.size() == best_s);
  CHECK(b.utility_value == doctest::Approx(best).epsilon(1e-14));

  // Distinct masses: the result is a mass-sorted prefix.
  for (const auto& d : dirichlet_dists(9, 50, 5)) {
    auto r2 = brute_force_bayes(d, UtilitySpec::fbeta(1.0));
    auto sorted = d.sorted();
    for (std::size_t i = 0; i < r2.size(); ++i) CHECK(r2.classes[i] == sorted[i].id);
  }
}

TEST_CASE("prefix utility curve") {
  auto c = prefix_utility_curve(ClassDist::normalized_from({0.5, 0.5}), UtilitySpec::fbeta(1.0));
  CHECK(c.size() == 2);
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(c[1] == doctest::Approx(2.0 / 3.0));
  c = prefix_utility_curve(ClassDist::normalized_from({1.0, 0.0}), UtilitySpec::precision());
  CHECK(c == std::vector<double>{1.0, 0.5});

  auto d = dirichlet_dists(20, 1, 77).front();
  auto spec = UtilitySpec::credal(1.6, 0.6);
  c = prefix_utility_curve(d, spec);
  auto sorted = d.sorted();
  std::vector<ClassId> prefix;
  for (std::size_t s = 1; s <= 20; ++s) {
    prefix.push_back(sorted[s - 1].id);
    CHECK(c[s - 1] == doctest::Approx(expected_utility(d, prefix, spec)).epsilon(1e-13));
  }
}

TEST_CASE("top-s and threshold") {
  auto d = ClassDist::normalized_from({0.0, 0.6, 0.3, 0.1});
  CHECK(top_s_predict(d, 2).classes == std::vector<ClassId>{1, 2});
  CHECK(top_s_predict(ClassDist::normalized_from({0.5, 0.5}), 1).classes == std::vector<ClassId>{0});
  CHECK(top_s_predict(d, 4).size() == 4);
  CHECK(code_of([&] { top_s_predict(d, 5); }) == ErrorCode::SizeOutOfRange);
  CHECK(code_of([&] { top_s_predict(d, 0); }) == ErrorCode::SizeOutOfRange);

  auto t = ClassDist::normalized_from({0.2, 0.5, 0.3});
  CHECK(threshold_predict(t, 0.7).classes == std::vector<ClassId>{1, 2});
  CHECK(threshold_predict(t, 0.5).classes == std::vector<ClassId>{1});
  CHECK(threshold_predict(t, 1.0).size() == 3);
  CHECK(code_of([&] { threshold_predict(t, -0.1); }) == ErrorCode::ThetaOutOfRange);
}

TEST_CASE("regret") {
  auto p = ClassDist::normalized_from({0.6, 0.4});
  auto same = compute_regret(p, p, UtilitySpec::fbeta(1.0));
  CHECK(same.regret == 0.0);
  CHECK(same.l1 == 0.0);
  auto q = ClassDist::normalized_from({0.4, 0.6});
  auto r = compute_regret(p, q, UtilitySpec::precision());
  CHECK(r.l1 == doctest::Approx(0.4));
  CHECK(r.regret >= 0.0);
  CHECK(r.regret <= 2 * r.l1);
  CHECK(code_of([&] { compute_regret(p, ClassDist::normalized_from({0.2, 0.3, 0.5}), UtilitySpec::precision()); }) ==
        ErrorCode::UniverseMismatch);
}

TEST_CASE("property: svbop matches the oracle, curves are unimodal, stop point") {
  std::mt19937_64 rng(21);
  int draws = 0;
  for (std::size_t k = 2; k <= 12; ++k) {
    for (const auto& d : dirichlet_dists(k, 30, rng())) {
      for (const auto& spec : grid_utilities(k)) {
        auto r = run(d, spec);
        REQUIRE(std::fabs(r.utility_value - subset_max(d, spec)) <= 1e-12);
        const auto curve = prefix_utility_curve(d, spec);
        bool decreased = false;
        for (std::size_t s = 1; s < curve.size(); ++s) {
          if (curve[s] < curve[s - 1]) decreased = true;
          if (decreased) REQUIRE_FALSE(curve[s] > curve[s - 1]);
        }
        // Stops one step past the last maximizer, or at exhaustion.
        const double mx = *std::max_element(curve.begin(), curve.end());
        std::size_t last = 0;
        for (std::size_t s = 0; s < curve.size(); ++s)
          if (curve[s] == mx) last = s + 1;
        CHECK(r.steps_queried >= last);
        CHECK(r.steps_queried <= last + 1);
      }
      ++draws;
    }
  }
  CHECK(draws == 330);
}

TEST_CASE("property: scale invariance") {
  for (const auto& d : dirichlet_dists(10, 100, 31)) {
    const auto scaled = d.scaled(37.5);
    for (const auto& spec : grid_utilities(10)) {
      auto a = run(d, spec);
      auto b = run(scaled, spec);
      CHECK(a.classes == b.classes);
      CHECK(b.utility_value == doctest::Approx(37.5 * a.utility_value).epsilon(1e-12));
    }
    CHECK(top_s_predict(d, 3).classes == top_s_predict(scaled, 3).classes);
  }
}

TEST_CASE("property: precision singletons") {
  for (const auto& d : dirichlet_dists(8, 200, 41)) {
    const auto curve = prefix_utility_curve(d, UtilitySpec::precision());
    CHECK(curve[0] == *std::max_element(curve.begin(), curve.end()));
  }
  // g(1) = 1 and g(s) = 1/s^2 below precision.
  const auto sub = UtilitySpec::credal(0.0, -1.0);
  for (const auto& d : dirichlet_dists(8, 200, 42)) {
    CHECK(run(d, sub, {.force_full_scan = true}).size() == 1);
  }
}

TEST_CASE("property: regret bound") {
  std::mt19937_64 rng(51);
  auto ps = dirichlet_dists(12, 200, 52);
  auto qs = dirichlet_dists(12, 200, 53);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto r = compute_regret(ps[i], qs[i], UtilitySpec::fbeta(1.0));
    CHECK(r.regret >= 0.0);
    CHECK(r.regret <= 2 * r.l1);
  }
}
