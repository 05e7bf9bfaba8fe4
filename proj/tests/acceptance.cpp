// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "svp/bundle.hpp"
#include "svp/conformal.hpp"
#include "svp/error.hpp"
#include "svp/experiment.hpp"
#include "svp/hnsw.hpp"
#include "svp/inference.hpp"
#include "svp/label_tree.hpp"
#include "svp/linear.hpp"
#include "svp/provider_full.hpp"
#include "svp/synth.hpp"
#include "svp/tree_model.hpp"

using namespace svp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared grid for criteria 1 and 2: 1000 Dirichlet draws, K = 2..15.
std::vector<ClassDist> oracle_grid() {
  std::mt19937_64 rng(1001);
  std::vector<ClassDist> out;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + static_cast<std::size_t>(i % 14);
    out.push_back(dirichlet_dists(k, 1, rng()).front());
  }
  return out;
}

std::vector<UtilitySpec> grid_utilities(std::size_t k) {
  const double alpha = static_cast<double>(k - 1) / static_cast<double>(k);
  return {UtilitySpec::precision(k),       UtilitySpec::fbeta(1.0, k),         UtilitySpec::fbeta(5.0, k),
          UtilitySpec::credal(1.6, 0.6, k), UtilitySpec::credal(2.2, 1.2, k), UtilitySpec::gen_reject(alpha, 2.0, k)};
}

Outcome c1_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = oracle_grid();
  double worst = 0.0;
  std::size_t mismatches = 0, runs = 0;
  for (const auto& d : grid) {
    for (const auto& spec : grid_utilities(d.num_classes())) {
      auto p = SortedListProvider::from_dist(d);
      const auto fast = svbop(p, spec);
      const auto slow = brute_force_bayes(d, spec);
      const double diff = std::fabs(fast.utility_value - slow.utility_value);
      worst = std::max(worst, diff);
      mismatches += !(diff <= 1e-12);
      ++runs;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0,
          fmt("%zu/%zu runs within 1e-12 (max diff %.3g), %.2f s (limit 60 s)", runs - mismatches, runs, worst, secs)};
}

Outcome c2_unimodal() {
  std::size_t violations = 0, curves = 0;
  for (const auto& d : oracle_grid()) {
    for (const auto& spec : grid_utilities(d.num_classes())) {
      const auto curve = prefix_utility_curve(d, spec);
      bool decreased = false;
      bool bad = false;
      for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i] < curve[i - 1]) decreased = true;
        else if (decreased && curve[i] > curve[i - 1]) bad = true;
      }
      violations += bad;
      ++curves;
    }
  }
  return {violations == 0, fmt("%zu violations / %zu curves", violations, curves)};
}

Outcome c3_singletons() {
  std::mt19937_64 rng(1003);
  std::size_t singletons = 0, precision_ok = 0;
  const std::size_t n = 1000;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = 2 + rng() % 30;
    const auto d = dirichlet_dists(k, 1, rng()).front();
    // g(s) = 1/s^2, g(1) = 1
    auto p = SortedListProvider::from_dist(d);
    singletons += svbop(p, UtilitySpec::credal(0.0, -1.0, k), SvbopOptions{true}).size() == 1;
    const auto curve = prefix_utility_curve(d, UtilitySpec::precision(k));
    precision_ok += curve.front() == *std::max_element(curve.begin(), curve.end());
  }
  return {singletons == n && precision_ok == n,
          fmt("%zu/%zu singletons with g(s)=1/s^2; precision best singleton = curve max on %zu/%zu", singletons, n,
              precision_ok, n)};
}

Outcome c4_regret() {
  std::mt19937_64 rng(1004);
  const std::size_t k = 12;
  const auto f1 = UtilitySpec::fbeta(1.0, k);
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto p = dirichlet_dists(k, 1, rng()).front();
    ClassDist q;
    if (i % 2 == 0) {
      q = dirichlet_dists(k, 1, rng()).front();
    } else {
      // small perturbation of p
      const auto noise = dirichlet_dists(k, 1, rng()).front();
      const double w = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
      std::vector<double> m(k);
      for (std::size_t c = 0; c < k; ++c) m[c] = (1 - w) * p.masses()[c] + w * noise.masses()[c];
      q = ClassDist::normalized_from(m);
    }
    try {
      const auto r = compute_regret(p, q, f1);
      if (r.regret < -1e-12) ++violations;
      if (r.l1 > 0) worst_ratio = std::max(worst_ratio, r.regret / (2 * r.l1));
    } catch (const Error&) {
      ++violations;
    }
  }
  return {violations == 0, fmt("%zu violations / 500 pairs (max regret / 2L1 = %.3f)", violations, worst_ratio)};
}

Outcome c5_region() {
  std::mt19937_64 rng(1005);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t inside_ok = 0, detected = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 3 + rng() % 198;
    const auto region = gen_reject_admissible_region(k);
    const double alpha = region.alpha_max * (0.01 + 0.99 * unit(rng));
    const double beta = region.beta_min + 4.0 * unit(rng);
    inside_ok += dominates_precision(UtilitySpec::gen_reject(alpha, beta, k), k);
  }
  for (int i = 0; i < 50; ++i) {
    const std::size_t k = 3 + rng() % 198;
    const auto region = gen_reject_admissible_region(k);
    const double beta = (region.beta_min - 0.05) * (0.05 + 0.95 * unit(rng));
    const auto spec = UtilitySpec::gen_reject(region.alpha_max, beta, k);
    bool found = false;
    for (std::size_t s = 1; s <= k && !found; ++s) found = spec.g(s) < 1.0 / static_cast<double>(s);
    detected += found;
  }
  return {inside_ok == 200 && detected == 50,
          fmt("%zu/200 inside dominate precision; %zu/50 below beta_min show g(s) < 1/s", inside_ok, detected)};
}

Outcome c6_hf() {
  std::mt19937_64 rng(1006);
  const SparseVector none;
  std::size_t order_ok = 0, sets_ok = 0, sets = 0, eval_ok = 0, ties = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 2 + rng() % 63;
    const auto d = dirichlet_dists(k, 1, rng()).front();
    const auto tree = random_binary_tree(k, rng());
    const auto models = TableNodeModels::induce(tree, d);

    HfProvider drain(tree, models, none);
    const auto sorted = d.sorted();
    bool same = true;
    for (std::size_t j = 0; j < k; ++j) {
      const auto e = drain.next();
      if (!e) {
        same = false;
        break;
      }
      if (e->id != sorted[j].id) {
        // documented tie rule: equal masses up to rounding may swap
        if (std::fabs(e->mass - sorted[j].mass) <= 1e-12 * sorted[j].mass) ++ties;
        else same = false;
      }
    }
    same = same && !drain.next();
    order_ok += same;
    eval_ok += drain.node_evaluations() <= 2 * k - 1;

    for (const auto& spec : {UtilitySpec::fbeta(1.0, k), UtilitySpec::credal(2.2, 1.2, k)}) {
      HfProvider hp(tree, models, none);
      auto fp = SortedListProvider::from_dist(d);
      auto a = svbop(hp, spec).classes;
      auto b = svbop(fp, spec).classes;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      sets_ok += a == b;
      ++sets;
    }
  }
  return {order_ok == 200 && sets_ok == sets && eval_ok == 200,
          fmt("order %zu/200 (%zu tie swaps), sets %zu/%zu, evaluations <= 2K-1 on %zu/200", order_ok, ties, sets_ok,
              sets, eval_ok)};
}

Outcome c7_hsg() {
  const std::size_t k = 500;
  BlobGenerator gen(BlobParams{k, 32, 4.0, 1.0, 1007});
  const auto model = gen.true_model();
  const auto queries = gen.sample(1000, 1008);
  HnswParams hp;
  hp.M = 10;
  const auto index = HnswIndex::build(model, hp);
  const SetPredictor f1(UtilitySpec::fbeta(1.0), k);

  double recall = 0.0;
  std::size_t identical = 0, dots = 0;
  for (const auto& x : queries.x) {
    auto scores = predict_scores(model, x);
    std::vector<ClassId> ids(k);
    std::iota(ids.begin(), ids.end(), 0);
    std::partial_sort(ids.begin(), ids.begin() + 10, ids.end(), [&](ClassId a, ClassId b) {
      const auto sa = scores[static_cast<std::size_t>(a)], sb = scores[static_cast<std::size_t>(b)];
      return sa != sb ? sa > sb : a < b;
    });
    const std::set<ClassId> truth(ids.begin(), ids.begin() + 10);
    for (const auto& h : index.query(model, x, 10, 100)) recall += truth.count(h.id);

    auto full = full_init(model, x, false);
    const auto want = f1.predict(full);
    HsgProvider exact(model, index, x, HsgOptions{10, k});
    identical += f1.predict(exact).classes == want.classes;

    HsgProvider fast(model, index, x, HsgOptions{10, 0});
    f1.predict(fast);
    dots += fast.dot_products();
  }
  recall /= 10.0 * static_cast<double>(queries.size());
  const double mean_dots = static_cast<double>(dots) / static_cast<double>(queries.size());
  const bool pass = recall >= 0.95 && identical == queries.size() && mean_dots < 0.5 * k;
  return {pass, fmt("recall@10 %.4f (>= 0.95), ef=K sets identical %zu/%zu, mean dot products %.1f (< %.0f)", recall,
                    identical, queries.size(), mean_dots, 0.5 * k)};
}

Outcome c8_trend() {
  const std::vector<UtilitySpec> utilities{UtilitySpec::fbeta(1.0), UtilitySpec::credal(2.2, 1.2)};
  struct Row {
    const char* name;
    Method method;
    std::size_t s;
  };
  const std::vector<Row> baselines{{"top-1", Method::top_s, 1},
                                   {"top-3", Method::top_s, 3},
                                   {"top-5", Method::top_s, 5},
                                   {"threshold", Method::threshold, 1}};
  std::string detail;
  bool pass = true;
  for (const auto& u : utilities) {
    std::vector<double> sum(baselines.size() + 1, 0.0);
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
      BlobGenerator gen(BlobParams{50, 16, 3.0, 1.0, 2000 + rep});
      const auto train = gen.sample(5000, 3000 + rep);
      const auto test = gen.sample(2000, 4000 + rep);
      RunConfig cfg;
      cfg.utility = u;
      cfg.seed = rep;
      cfg.timing_passes = 1;
      cfg.train.C = 10.0;
      const auto pm = prepare_model(train, cfg, false, false);
      cfg.method = Method::svbop_full;
      sum[0] += evaluate(cfg, pm, test).mean_utility;
      for (std::size_t b = 0; b < baselines.size(); ++b) {
        cfg.method = baselines[b].method;
        cfg.s = baselines[b].s;
        sum[b + 1] += evaluate(cfg, pm, test).mean_utility;
      }
    }
    detail += fmt("%s: svbop %.4f", u.to_string().c_str(), sum[0] / 5);
    for (std::size_t b = 0; b < baselines.size(); ++b) {
      detail += fmt(", %s %.4f", baselines[b].name, sum[b + 1] / 5);
      pass = pass && sum[0] / 5 >= sum[b + 1] / 5 - 0.005;
    }
    detail += "; ";
  }
  detail += "tolerance 0.005, means over 5 seeds";
  return {pass, detail};
}

Outcome c9_icp() {
  BlobGenerator gen(BlobParams{10, 8, 2.0, 1.0, 1009});
  const auto model = gen.true_model();
  const auto table = icp_calibrate(model, gen.sample(1000, 1010));
  const auto test = gen.sample(10000, 1011);
  std::size_t covered = 0, nest_violations = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto dist = predict_proba(model, test.x[i]);
    const auto wide = icp_predict(table, dist, 0.01);
    const auto narrow = icp_predict(table, dist, 0.10);
    covered += narrow.contains(test.y[i]);
    for (ClassId c : narrow.classes) nest_violations += !wide.contains(c);
  }
  const double coverage = static_cast<double>(covered) / static_cast<double>(test.size());
  return {coverage >= 0.88 && nest_violations == 0,
          fmt("coverage %.4f at eps=0.10 (>= 0.88), %zu nesting violations", coverage, nest_violations)};
}

Outcome c10_numerics() {
  std::mt19937_64 rng(1012);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst_grad = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + rng() % 5, dim = 1 + rng() % 8;
    Dataset d;
    d.dim = dim;
    d.num_classes = k;
    std::vector<double> v(dim);
    for (int i = 0; i < 25; ++i) {
      for (double& x : v) x = nd(rng);
      d.x.push_back(SparseVector::from_dense(v));
      d.y.push_back(static_cast<ClassId>(rng() % k));
    }
    LinearModel m(k, dim, true);
    for (double& w : m.params()) w = 0.5 * nd(rng);
    const auto view = ExampleView::of(d);
    const double C = 0.5 + 2.0 * std::fabs(nd(rng));
    std::vector<double> grad(m.params().size()), scratch(grad.size());
    softmax_objective(m, view, C, grad, false);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < grad.size(); ++j) {
      const double orig = m.params()[j], h = 1e-5;
      m.params()[j] = orig + h;
      const double fp = softmax_objective(m, view, C, scratch, false);
      m.params()[j] = orig - h;
      const double fm = softmax_objective(m, view, C, scratch, false);
      m.params()[j] = orig;
      const double fd = (fp - fm) / (2 * h);
      num += (fd - grad[j]) * (fd - grad[j]);
      den += grad[j] * grad[j];
    }
    worst_grad = std::max(worst_grad, std::sqrt(num / den));
  }

  BlobGenerator gen(BlobParams{20, 8, 3.0, 1.0, 1013});
  const auto data = gen.sample(1000, 1014);
  const auto flat = train_flat(data, TrainOptions{});
  double worst_softmax = 0.0;
  for (const auto& x : data.x) {
    const auto p = predict_proba(flat, x);
    const double total = std::accumulate(p.masses().begin(), p.masses().end(), 0.0);
    worst_softmax = std::max(worst_softmax, std::fabs(total - 1.0));
  }

  double worst_path = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 63;
    const auto tree = random_binary_tree(k, rng());
    const auto models = TableNodeModels::induce(tree, dirichlet_dists(k, 1, rng()).front());
    double total = 0.0;
    for (ClassId c = 0; c < static_cast<ClassId>(k); ++c) total += path_probability(tree, models, c);
    worst_path = std::max(worst_path, std::fabs(total - 1.0));
  }
  const auto tree = build_2means_tree(class_profiles(data), 3, 1e-3, 1);
  const auto nodes = train_tree_nodes(data, tree, TrainOptions{});
  for (std::size_t i = 0; i < 200; ++i) {
    HfProvider p(tree, nodes, data.x[i]);
    double total = 0.0;
    while (auto e = p.next()) total += e->mass;
    worst_path = std::max(worst_path, std::fabs(total - 1.0));
  }
  return {worst_grad <= 1e-5 && worst_softmax <= 1e-9 && worst_path <= 1e-9,
          fmt("max gradient rel. error %.2e (<= 1e-5), softmax |sum-1| %.2e, path |sum-1| %.2e (<= 1e-9)", worst_grad,
              worst_softmax, worst_path)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string run_once(const RunConfig& base) {
  BlobGenerator gen(BlobParams{15, 8, 2.5, 1.0, 1015});
  const auto train = gen.sample(600, 1016);
  const auto test = gen.sample(200, 1017);
  std::vector<MetricsReport> reports;
  RunConfig cfg = base;
  const auto pm = prepare_model(train, cfg, true, true);
  for (auto m : {Method::svbop_full, Method::svbop_hsg, Method::svbop_hf, Method::top_s, Method::threshold,
                 Method::icp, Method::oracle}) {
    cfg.method = m;
    auto r = evaluate(cfg, pm, test);
    r.t_train_s = r.t_test_ms = 0.0;
    reports.push_back(std::move(r));
  }
  std::ostringstream weights;
  write_weights(weights, pm.bundle);
  return emit_report(reports, "json") + weights.str();
}

Outcome c11_determinism() {
  RunConfig cfg;
  cfg.seed = 11;
  cfg.max_leaf = 4;
  cfg.keep_records = true;
  cfg.timing_passes = 1;
  const bool runs_equal = run_once(cfg) == run_once(cfg);

  BlobGenerator gen(BlobParams{12, 6, 3.0, 1.0, 1018});
  const auto pm = prepare_model(gen.sample(400, 1019), cfg, true, true);
  const auto root = fs::temp_directory_path() / "svp_acceptance";
  fs::remove_all(root);
  save_bundle(pm.bundle, (root / "a").string());
  const auto loaded = load_bundle((root / "a").string());
  save_bundle(loaded, (root / "b").string());
  bool bundle_equal = loaded == pm.bundle;
  for (const char* f : {"manifest.json", "weights.bin", "labels.txt", "tree.txt", "index.hnsw"})
    bundle_equal = bundle_equal && slurp(root / "a" / f) == slurp(root / "b" / f);

  const auto text = pm.bundle.tree->to_text();
  const auto tree_back = load_hierarchy(text, pm.bundle.num_classes());
  const bool tree_equal = tree_back == *pm.bundle.tree && tree_back.to_text() == text;

  std::ostringstream first;
  pm.bundle.index->save(first);
  std::istringstream in(first.str());
  const auto index_back = HnswIndex::load(in);
  std::ostringstream second;
  index_back.save(second);
  const bool index_equal = index_back == *pm.bundle.index && first.str() == second.str();
  fs::remove_all(root);

  return {runs_equal && bundle_equal && tree_equal && index_equal,
          fmt("repeat run identical: %s; bundle: %s; tree file: %s; index file: %s", runs_equal ? "yes" : "no",
              bundle_equal ? "yes" : "no", tree_equal ? "yes" : "no", index_equal ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Bayes-oracle equivalence", c1_oracle},
      {"unimodal prefix curves", c2_unimodal},
      {"singleton optimality", c3_singletons},
      {"regret bound", c4_regret},
      {"generalized reject region", c5_region},
      {"HF exactness", c6_hf},
      {"HSG fidelity", c7_hsg},
      {"blob trend vs baselines", c8_trend},
      {"ICP coverage", c9_icp},
      {"numerics", c10_numerics},
      {"determinism and round-trips", c11_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2zu %-28s %s  %s [%.1f s]\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
