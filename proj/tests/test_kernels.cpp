#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "svp/kernels.hpp"
#include "svp/linear.hpp"
#include "svp/synth.hpp"

using namespace svp;

namespace {

bool bit_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

LinearModel random_model(std::size_t k, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  LinearModel m(k, dim, true);
  for (double& w : m.params()) w = nd(rng);
  return m;
}

}  // namespace

TEST_CASE("sparse dot matches a dense loop") {
  std::vector<double> row{1.0, 2.0, 3.0, 4.0};
  CHECK(kernels::sparse_dot(row, SparseVector({{1, 0.5}, {3, -1.0}})) == 1.0 - 4.0);
  CHECK(kernels::sparse_dot(row, SparseVector{}) == 0.0);
}

TEST_CASE("softmax kernel") {
  std::vector<double> s{1000.0, 1000.0};
  kernels::softmax(s);
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 0.5);
  std::vector<double> t{0.0, std::log(3.0)};
  kernels::softmax(t);
  CHECK(t[1] == doctest::Approx(0.75));
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  auto data = gaussian_blobs(BlobParams{37, 23, 2.0, 1.0, 1}, 513);
  auto model = random_model(37, 23, 2);
  auto view = ExampleView::of(data);
  for (int threads : {1, 2, 3, 4, 7}) {
    kernels::set_threads(threads);
    CAPTURE(threads);

    std::vector<double> a(37), b(37);
    for (std::size_t i = 0; i < 20; ++i) {
      kernels::scores_serial(model, data.x[i], a);
      kernels::scores_parallel(model, data.x[i], b);
      CHECK(bit_equal(a, b));
    }

    std::vector<double> ba(data.size() * 37), bb(ba.size());
    kernels::batch_scores_serial(model, data.x, ba);
    kernels::batch_scores_parallel(model, data.x, bb);
    CHECK(bit_equal(ba, bb));

    std::vector<double> ga(model.params().size()), gb(ga.size());
    const double la = kernels::cross_entropy_gradient_serial(model, view, ga);
    const double lb = kernels::cross_entropy_gradient_parallel(model, view, gb);
    CHECK(std::memcmp(&la, &lb, sizeof(double)) == 0);
    CHECK(bit_equal(ga, gb));
  }
  kernels::set_threads(1);
}

TEST_CASE("batch scores agree with per-row scores") {
  auto data = gaussian_blobs(BlobParams{5, 6, 2.0, 1.0, 3}, 40);
  auto model = random_model(5, 6, 4);
  std::vector<double> all(data.size() * 5), one(5);
  kernels::batch_scores_serial(model, data.x, all);
  for (std::size_t i = 0; i < data.size(); ++i) {
    kernels::scores_serial(model, data.x[i], one);
    CHECK(bit_equal(std::span<const double>(all).subspan(i * 5, 5), one));
  }
}

TEST_CASE("set_threads controls max_threads") {
  kernels::set_threads(3);
  CHECK(kernels::max_threads() == 3);
  kernels::set_threads(1);
  CHECK(kernels::max_threads() == 1);
}
