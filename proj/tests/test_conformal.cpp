#include <doctest.h>

#include <cmath>
#include <random>

#include "svp/conformal.hpp"
#include "svp/error.hpp"
#include "svp/synth.hpp"

using namespace svp;

TEST_CASE("calibration of a perfectly confident model") {
  LinearModel m(3, 1, true);
  m.bias(0) = 0.0;
  m.bias(1) = -800.0;
  m.bias(2) = -800.0;
  Dataset d;
  d.dim = 1;
  d.num_classes = 3;
  for (int i = 0; i < 5; ++i) {
    d.x.push_back(SparseVector{});
    d.y.push_back(0);
  }
  auto t = icp_calibrate(m, d);
  REQUIRE(t.size() == 5);
  for (double s : t.scores()) CHECK(s == 0.0);
}

TEST_CASE("calibration of a uniform model") {
  LinearModel m(4, 2, true);
  auto d = gaussian_blobs(BlobParams{4, 2, 2.0, 1.0, 1}, 50);
  auto t = icp_calibrate(m, d);
  for (double s : t.scores()) CHECK(s == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("calibration table matches per-example recomputation") {
  BlobGenerator gen(BlobParams{6, 5, 2.0, 1.0, 2});
  auto model = gen.true_model();
  auto d = gen.sample(300, 3);
  auto t = icp_calibrate(model, d);
  std::vector<double> ref;
  for (std::size_t i = 0; i < d.size(); ++i) {
    // softmax by hand
    std::vector<double> s(6);
    double mx = -INFINITY;
    for (std::size_t c = 0; c < 6; ++c) {
      s[c] = model.bias(c);
      for (const auto& f : d.x[i].features()) s[c] += model.row(c)[f.index] * f.value;
      mx = std::max(mx, s[c]);
    }
    double z = 0.0;
    for (double v : s) z += std::exp(v - mx);
    ref.push_back(1.0 - std::exp(s[static_cast<std::size_t>(d.y[i])] - mx) / z);
  }
  std::sort(ref.begin(), ref.end());
  REQUIRE(t.size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(t.scores()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t.scores()[i - 1] <= t.scores()[i]);
}

TEST_CASE("calibration errors") {
  Dataset empty;
  empty.dim = 2;
  empty.num_classes = 2;
  try {
    icp_calibrate(LinearModel(2, 2), empty);
    FAIL("expected EmptyCalibration");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCalibration);
  }
  std::vector<double> bad{0.5, 1.5};
  CHECK_THROWS_AS(CalibrationTable::from_true_class_probs(bad), Error);
}

TEST_CASE("p-value counts and smoothing") {
  std::vector<double> probs{0.9, 0.6, 0.3};  // scores 0.1, 0.4, 0.7
  auto t = CalibrationTable::from_true_class_probs(probs);
  CHECK(t.p_value(1.0) == doctest::Approx(4.0 / 4.0));
  CHECK(t.p_value(0.5) == doctest::Approx(2.0 / 4.0));
  CHECK(t.p_value(0.65) == doctest::Approx(3.0 / 4.0));
  CHECK(t.p_value(0.2) == doctest::Approx(1.0 / 4.0));
  CHECK(t.p_value(0.0) == doctest::Approx(1.0 / 4.0));
}

TEST_CASE("tiny epsilon keeps every class, epsilon near 1 can empty the set") {
  std::vector<double> probs{0.8, 0.7, 0.9, 0.6};
  auto t = CalibrationTable::from_true_class_probs(probs);
  auto dist = ClassDist::normalized_from({0.5, 0.2, 0.2, 0.1});
  auto all = icp_predict(t, dist, 1e-9);
  CHECK(all.size() == 4);
  CHECK(all.classes == std::vector<ClassId>{0, 1, 2, 3});
  auto none = icp_predict(t, dist, 0.999);
  CHECK(none.size() == 0);
}

TEST_CASE("prediction sets nest as epsilon grows") {
  BlobGenerator gen(BlobParams{8, 4, 2.0, 1.0, 4});
  auto model = gen.true_model();
  auto t = icp_calibrate(model, gen.sample(200, 5));
  auto test = gen.sample(500, 6);
  const std::vector<double> eps{0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 0.9};
  for (const auto& x : test.x) {
    auto dist = predict_proba(model, x);
    for (std::size_t k = 1; k < eps.size(); ++k) {
      auto wide = icp_predict(t, dist, eps[k - 1]);
      auto narrow = icp_predict(t, dist, eps[k]);
      for (ClassId c : narrow.classes) CHECK(wide.contains(c));
    }
  }
}

TEST_CASE("empirical coverage on a well-specified generator") {
  BlobGenerator gen(BlobParams{10, 8, 2.0, 1.0, 7});
  auto model = gen.true_model();
  auto t = icp_calibrate(model, gen.sample(1000, 8));
  auto test = gen.sample(10000, 9);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < test.size(); ++i) covered += icp_predict(model, t, test.x[i], 0.10).contains(test.y[i]);
  const double coverage = static_cast<double>(covered) / 10000.0;
  MESSAGE("coverage " << coverage);
  CHECK(coverage >= 0.88);
}

TEST_CASE("p-values of the true class are valid") {
  // fresh calibration set per draw so the bound is marginal over both
  BlobGenerator gen(BlobParams{5, 4, 1.5, 1.0, 10});
  auto model = gen.true_model();
  constexpr std::size_t n = 99;
  constexpr std::size_t draws = 100000;
  auto pool = gen.sample(draws * (n + 1), 11);
  std::vector<double> probs(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) probs[i] = predict_proba(model, pool.x[i]).mass(pool.y[i]);
  for (double eps : {0.05, 0.10, 0.25}) {
    std::size_t low = 0;
    for (std::size_t d = 0; d < draws; ++d) {
      const auto base = probs.begin() + static_cast<std::ptrdiff_t>(d * (n + 1));
      auto t = CalibrationTable::from_true_class_probs(std::span<const double>(&*base, n));
      low += t.p_value(*(base + n)) <= eps;
    }
    const double rate = static_cast<double>(low) / draws;
    MESSAGE("eps " << eps << " rate " << rate);
    CHECK(rate <= eps + 2.0 / (n + 1));
  }
}
