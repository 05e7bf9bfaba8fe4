// Serial reference kernels against their OpenMP versions, plus per-query
// provider costs. Thread count is the benchmark argument for parallel runs.

#include <benchmark/benchmark.h>

#include "svp/hnsw.hpp"
#include "svp/inference.hpp"
#include "svp/kernels.hpp"
#include "svp/label_tree.hpp"
#include "svp/linear.hpp"
#include "svp/provider_full.hpp"
#include "svp/synth.hpp"
#include "svp/tree_model.hpp"

using namespace svp;

namespace {

struct Fixture {
  BlobGenerator gen{BlobParams{1000, 64, 4.0, 1.0, 1}};
  LinearModel model = gen.true_model();
  Dataset data = gen.sample(2000, 2);
  ExampleView view = ExampleView::of(data);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_scores_serial(benchmark::State& st) {
  const auto& f = fixture();
  std::vector<double> out(f.model.num_outputs());
  std::size_t i = 0;
  for (auto _ : st) {
    kernels::scores_serial(f.model, f.data.x[i++ % f.data.size()], out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_scores_parallel(benchmark::State& st) {
  const auto& f = fixture();
  kernels::set_threads(static_cast<int>(st.range(0)));
  std::vector<double> out(f.model.num_outputs());
  std::size_t i = 0;
  for (auto _ : st) {
    kernels::scores_parallel(f.model, f.data.x[i++ % f.data.size()], out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_batch_scores_serial(benchmark::State& st) {
  const auto& f = fixture();
  std::span<const SparseVector> xs(f.data.x.data(), 200);
  std::vector<double> out(xs.size() * f.model.num_outputs());
  for (auto _ : st) {
    kernels::batch_scores_serial(f.model, xs, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_batch_scores_parallel(benchmark::State& st) {
  const auto& f = fixture();
  kernels::set_threads(static_cast<int>(st.range(0)));
  std::span<const SparseVector> xs(f.data.x.data(), 200);
  std::vector<double> out(xs.size() * f.model.num_outputs());
  for (auto _ : st) {
    kernels::batch_scores_parallel(f.model, xs, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_gradient_serial(benchmark::State& st) {
  const auto& f = fixture();
  std::vector<double> grad(f.model.params().size());
  for (auto _ : st) benchmark::DoNotOptimize(kernels::cross_entropy_gradient_serial(f.model, f.view, grad));
}

void BM_gradient_parallel(benchmark::State& st) {
  const auto& f = fixture();
  kernels::set_threads(static_cast<int>(st.range(0)));
  std::vector<double> grad(f.model.params().size());
  for (auto _ : st) benchmark::DoNotOptimize(kernels::cross_entropy_gradient_parallel(f.model, f.view, grad));
}

void BM_svbop_full(benchmark::State& st) {
  const auto& f = fixture();
  const SetPredictor pred(UtilitySpec::fbeta(1.0), f.model.num_outputs());
  std::size_t i = 0;
  for (auto _ : st) {
    auto p = full_init(f.model, f.data.x[i++ % f.data.size()], false);
    benchmark::DoNotOptimize(pred.predict(p));
  }
}

void BM_svbop_hsg(benchmark::State& st) {
  const auto& f = fixture();
  static const HnswIndex index = HnswIndex::build(f.model, HnswParams{});
  const SetPredictor pred(UtilitySpec::fbeta(1.0), f.model.num_outputs());
  std::size_t i = 0;
  for (auto _ : st) {
    HsgProvider p(f.model, index, f.data.x[i++ % f.data.size()]);
    benchmark::DoNotOptimize(pred.predict(p));
  }
}

void BM_svbop_hf(benchmark::State& st) {
  const auto& f = fixture();
  static const LabelTree tree = build_2means_tree(class_profiles(f.data), 2, 1e-3, 1);
  static const LinearNodeModels nodes = [&] {
    TrainOptions opt;
    opt.max_iterations = 50;
    return train_tree_nodes(f.data, tree, opt);
  }();
  const SetPredictor pred(UtilitySpec::fbeta(1.0), f.model.num_outputs());
  std::size_t i = 0;
  for (auto _ : st) {
    HfProvider p(tree, nodes, f.data.x[i++ % f.data.size()]);
    benchmark::DoNotOptimize(pred.predict(p));
  }
}

}  // namespace

BENCHMARK(BM_scores_serial);
BENCHMARK(BM_scores_parallel)->Arg(1)->Arg(2)->Arg(4);
BENCHMARK(BM_batch_scores_serial);
BENCHMARK(BM_batch_scores_parallel)->Arg(1)->Arg(2)->Arg(4);
BENCHMARK(BM_gradient_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gradient_parallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_svbop_full);
BENCHMARK(BM_svbop_hsg);
BENCHMARK(BM_svbop_hf);

BENCHMARK_MAIN();
