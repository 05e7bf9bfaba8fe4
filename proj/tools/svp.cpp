// svp: command-line front end for training, indexing, prediction and evaluation.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "svp/bundle.hpp"
#include "svp/experiment.hpp"
#include "svp/kernels.hpp"
#include "svp/provider_full.hpp"
#include "svp/svmlight.hpp"
#include "svp/synth.hpp"

namespace {

using namespace svp;

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string format;
};

struct ModelFlags {
  double C = 1.0;
  double eps_l = 1e-4;
  std::size_t max_iter = 500;
  double prune_eta = 0.0;
  std::string tree = "none";
  std::string tree_file;
  std::size_t max_leaf = 20;
  double eps_c = 0.001;
  bool index = false;
  std::size_t M = 10;
  std::size_t ef_construction = 50;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--C", f.C, "Inverse L2 regularization strength")->capture_default_str();
  cmd->add_option("--eps-l", f.eps_l, "Relative objective decrease that stops training")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "Optimizer iteration cap")->capture_default_str();
  cmd->add_option("--prune-eta", f.prune_eta, "Zero weights below this magnitude")->capture_default_str();
  cmd->add_option("--max-leaf", f.max_leaf, "2-means tree: classes per leaf group")->capture_default_str();
  cmd->add_option("--eps-c", f.eps_c, "2-means tree: centroid tolerance")->capture_default_str();
  cmd->add_option("--M", f.M, "HNSW out-degree")->capture_default_str();
  cmd->add_option("--ef-construction", f.ef_construction, "HNSW build candidate list")->capture_default_str();
}

TreeSource tree_source(const std::string& name) {
  if (name == "flat") return TreeSource::flat;
  if (name == "2means") return TreeSource::kmeans;
  if (name == "huffman") return TreeSource::huffman;
  if (name == "random") return TreeSource::random;
  if (name == "file") return TreeSource::file;
  throw Error(ErrorCode::InvalidParams, "unknown tree kind '" + name + "'");
}

double parse_icp(const std::string& text) {
  std::string v = text;
  if (auto eq = v.find('='); eq != std::string::npos) {
    if (v.substr(0, eq) != "epsilon") throw Error(ErrorCode::InvalidParams, "--icp expects epsilon=<value>");
    v = v.substr(eq + 1);
  }
  try {
    std::size_t used = 0;
    const double e = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return e;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidParams, "bad epsilon '" + v + "'");
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- synth

struct SynthFlags {
  std::string kind = "blobs";
  std::size_t classes = 10;
  std::size_t dim = 16;
  std::size_t n = 1000;
  std::size_t n_test = 0;
  double separation = 4.0;
  double noise = 1.0;
  double concentration = 1.0;
  std::string out = "-";
  std::string test_out;
};

int run_synth(const Globals& g, const SynthFlags& f) {
  if (f.classes < 2) throw Error(ErrorCode::InvalidParams, "need at least 2 classes");
  std::ostringstream os;
  if (f.kind == "blobs") {
    BlobGenerator gen(BlobParams{f.classes, f.dim, f.separation, f.noise, g.seed});
    write_svmlight(os, gen.sample(f.n, g.seed + 1), 1);
    write_output(f.out, os.str());
    if (!f.test_out.empty()) {
      std::ostringstream ts;
      write_svmlight(ts, gen.sample(f.n_test ? f.n_test : f.n, g.seed + 2), 1);
      write_output(f.test_out, ts.str());
    }
  } else if (f.kind == "dirichlet") {
    char buf[32];
    for (const auto& d : dirichlet_dists(f.classes, f.n, g.seed, f.concentration)) {
      bool first = true;
      for (double m : d.masses()) {
        std::snprintf(buf, sizeof buf, "%.17g", m);
        os << (first ? "" : " ") << buf;
        first = false;
      }
      os << '\n';
    }
    write_output(f.out, os.str());
  } else {
    throw Error(ErrorCode::InvalidParams, "unknown synth kind '" + f.kind + "'");
  }
  return 0;
}

// ---- train / tree-build / index-build

struct TrainFlags {
  std::string data;
  int base = 1;
  std::string out;
  ModelFlags model;
};

LabelTree build_tree(const std::string& kind, const Dataset& data, const ModelFlags& m, std::uint64_t seed,
                     const std::string& tree_file) {
  switch (tree_source(kind)) {
    case TreeSource::flat: return flat_tree(data.num_classes);
    case TreeSource::kmeans: return build_2means_tree(class_profiles(data), m.max_leaf, m.eps_c, seed);
    case TreeSource::huffman: {
      std::vector<double> freq(data.num_classes, 0.0);
      for (ClassId y : data.y) freq[static_cast<std::size_t>(y)] += 1.0;
      return build_huffman_tree(freq);
    }
    case TreeSource::random: return random_binary_tree(data.num_classes, seed);
    case TreeSource::file: return load_hierarchy(read_text(tree_file), data.num_classes);
  }
  throw Error(ErrorCode::InvalidParams, "unknown tree kind");
}

int run_train(const Globals& g, const TrainFlags& f) {
  const RawDataset raw = read_svmlight(f.data, f.base);
  ModelBundle b;
  b.labels = LabelMap(raw.labels);
  const Dataset data = to_dataset(raw, b.labels);
  TrainOptions opt;
  opt.C = f.model.C;
  opt.eps_l = f.model.eps_l;
  opt.max_iterations = f.model.max_iter;
  opt.seed = g.seed;

  LinearModel flat = train_flat(data, opt);
  if (f.model.prune_eta > 0.0) flat = prune_weights(flat, f.model.prune_eta);
  std::string kind = f.model.tree;
  if (!f.model.tree_file.empty()) {
    if (kind != "none" && kind != "file") throw Error(ErrorCode::ConfigConflict, "--tree-file goes with --tree file");
    kind = "file";
  }
  if (kind != "none") {
    b.tree = build_tree(kind, data, f.model, g.seed, f.model.tree_file);
    b.nodes = train_tree_nodes(data, *b.tree, opt);
    if (f.model.prune_eta > 0.0) b.nodes = prune_weights(b.nodes, f.model.prune_eta);
  }
  if (f.model.index) {
    b.index = HnswIndex::build(flat, HnswParams{f.model.M, f.model.ef_construction, 0.0, g.seed});
  }
  b.flat = std::move(flat);
  save_bundle(b, f.out);
  std::cerr << "trained " << b.kind() << " model: K=" << b.num_classes() << " D=" << b.dim()
            << " n=" << data.size() << " -> " << f.out << "\n";
  return 0;
}

int run_tree_build(const Globals& g, const TrainFlags& f) {
  const RawDataset raw = read_svmlight(f.data, f.base);
  const Dataset data = to_dataset(raw, LabelMap(raw.labels));
  const LabelTree tree = build_tree(f.model.tree == "none" ? "2means" : f.model.tree, data, f.model, g.seed,
                                    f.model.tree_file);
  write_output(f.out, tree.to_text());
  return 0;
}

int run_index_build(const Globals& g, const TrainFlags& f) {
  ModelBundle b = load_bundle(f.out);
  if (!b.flat) throw Error(ErrorCode::ConfigConflict, "bundle has no flat model to index");
  b.index = HnswIndex::build(*b.flat, HnswParams{f.model.M, f.model.ef_construction, 0.0, g.seed});
  save_bundle(b, f.out);
  return 0;
}

// ---- predict

struct PredictFlags {
  std::string bundle;
  std::string data;
  std::string calib;
  int base = 1;
  std::string method = "svbop_full";
  std::string utility = "fbeta:beta=1";
  std::size_t s = 1;
  double theta = 0.0;
  std::string icp;
  std::size_t k0 = 10;
  std::size_t ef_search = 0;
  std::string out = "-";
};

int run_predict(const Globals& g, const PredictFlags& f, bool theta_given) {
  PreparedModel pm;
  pm.bundle = load_bundle(f.bundle);
  const std::size_t k = pm.bundle.num_classes();
  RunConfig cfg;
  cfg.method = parse_method(f.method);
  if (!f.icp.empty()) {
    if (cfg.method != Method::icp) throw Error(ErrorCode::ConfigConflict, "--icp requires --method icp");
    cfg.epsilon = parse_icp(f.icp);
  }
  cfg.utility = UtilitySpec::parse(f.utility, k);
  cfg.s = f.s;
  cfg.hsg = HsgOptions{f.k0, f.ef_search};
  cfg.seed = g.seed;
  cfg.holdout = 0.0;
  if (theta_given) cfg.theta = f.theta;
  if (cfg.method == Method::threshold && !theta_given) {
    throw Error(ErrorCode::ConfigConflict, "predict with threshold needs --theta");
  }
  if (cfg.method == Method::icp) {
    if (f.calib.empty()) throw Error(ErrorCode::ConfigConflict, "predict with icp needs --calib");
    const RawDataset craw = read_svmlight(f.calib, f.base);
    pm.calibration = icp_calibrate(*pm.bundle.flat, to_dataset(craw, pm.bundle.labels, pm.bundle.dim()));
  }
  if (cfg.method == Method::svbop_hsg && !pm.bundle.index) throw Error(ErrorCode::ConfigConflict, "bundle has no index");
  if (cfg.method == Method::svbop_hf && !pm.bundle.tree) throw Error(ErrorCode::ConfigConflict, "bundle has no tree");

  const RawDataset raw = read_svmlight(f.data, f.base);
  std::optional<SetPredictor> predictor;
  const UtilitySpec spec = cfg.utility.with_num_classes(k);
  if (cfg.method == Method::oracle) {
    predictor.emplace(spec, k, SvbopOptions{.force_full_scan = true});
  } else if (cfg.method == Method::svbop_full || cfg.method == Method::svbop_hsg || cfg.method == Method::svbop_hf) {
    predictor.emplace(spec, k);
  }

  std::vector<PredictionSet> preds(raw.size());
  for (const auto& x : raw.x) pm.bundle.flat->check_input(x);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < raw.size(); ++i) {
    preds[i] = predict_one(cfg, pm, predictor ? &*predictor : nullptr, raw.x[i], f.theta);
  }

  const std::string fmt = g.format.empty() ? "text" : g.format;
  std::ostringstream os;
  if (fmt == "json") {
    auto arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      std::vector<std::int64_t> labels;
      for (ClassId c : preds[i].classes) labels.push_back(pm.bundle.labels.raw(c));
      arr.push_back({{"label", raw.labels[i]}, {"prediction", labels}, {"mass", preds[i].cum_mass}});
    }
    os << arr.dump(2) << '\n';
  } else if (fmt == "text" || fmt == "csv") {
    const char sep = fmt == "csv" ? ',' : '\t';
    for (std::size_t i = 0; i < raw.size(); ++i) {
      os << raw.labels[i] << sep;
      for (std::size_t j = 0; j < preds[i].classes.size(); ++j) {
        os << (j ? " " : "") << pm.bundle.labels.raw(preds[i].classes[j]);
      }
      os << '\n';
    }
  } else {
    throw Error(ErrorCode::InvalidParams, "unknown format '" + fmt + "'");
  }
  write_output(f.out, os.str());
  return 0;
}

// ---- eval

struct EvalFlags {
  std::string train;
  std::string test;
  int base = 1;
  std::vector<std::string> methods;
  std::string utility = "fbeta:beta=1";
  std::size_t s = 1;
  double theta = 0.0;
  std::string icp;
  std::optional<double> val_split;
  std::optional<double> calib_split;
  std::size_t k0 = 10;
  std::size_t ef_search = 0;
  int passes = 3;
  bool no_timing = false;
  bool records = false;
  std::string out = "-";
  ModelFlags model;
};

int run_eval(const Globals& g, EvalFlags f, bool theta_given) {
  const RawDataset train_raw = read_svmlight(f.train, f.base);
  const RawDataset test_raw = read_svmlight(f.test, f.base);
  std::vector<std::int64_t> all = train_raw.labels;
  all.insert(all.end(), test_raw.labels.begin(), test_raw.labels.end());
  const LabelMap labels(all);
  const std::size_t dim = std::max(train_raw.dim, test_raw.dim);
  const Dataset train = to_dataset(train_raw, labels, dim);
  const Dataset test = to_dataset(test_raw, labels, dim);

  if (f.val_split && f.calib_split && *f.val_split != *f.calib_split) {
    throw Error(ErrorCode::ConfigConflict, "--val-split and --calib-split name the same holdout; give one value");
  }
  std::optional<double> epsilon;
  if (!f.icp.empty()) epsilon = parse_icp(f.icp);
  if (f.methods.empty()) f.methods.push_back(epsilon ? "icp" : "svbop_full");

  RunConfig base;
  base.utility = UtilitySpec::parse(f.utility, labels.num_classes());
  base.s = f.s;
  if (theta_given) base.theta = f.theta;
  if (epsilon) base.epsilon = *epsilon;
  base.hsg = HsgOptions{f.k0, f.ef_search};
  base.hnsw = HnswParams{f.model.M, f.model.ef_construction, 0.0, g.seed};
  if (f.model.tree != "none") base.tree_source = tree_source(f.model.tree);
  base.tree_path = f.model.tree_file;
  if (!f.model.tree_file.empty()) base.tree_source = TreeSource::file;
  base.max_leaf = f.model.max_leaf;
  base.eps_c = f.model.eps_c;
  base.train.C = f.model.C;
  base.train.eps_l = f.model.eps_l;
  base.train.max_iterations = f.model.max_iter;
  base.prune_eta = f.model.prune_eta;
  base.holdout = f.val_split.value_or(f.calib_split.value_or(0.2));
  base.seed = g.seed;
  base.timing_passes = f.passes;
  base.keep_records = f.records;

  std::vector<Method> methods;
  bool need_tree = false, need_index = false;
  for (const auto& name : f.methods) {
    methods.push_back(parse_method(name));
    need_tree |= methods.back() == Method::svbop_hf;
    need_index |= methods.back() == Method::svbop_hsg;
  }
  if (epsilon && std::find(methods.begin(), methods.end(), Method::icp) == methods.end()) {
    throw Error(ErrorCode::ConfigConflict, "--icp given without the icp method");
  }
  for (Method m : methods) {
    RunConfig c = base;
    c.method = m;
    c.validate();
  }

  // Every method sees the same trained model.
  const PreparedModel pm = prepare_model(train, base, need_tree, need_index);
  std::vector<MetricsReport> reports;
  for (Method m : methods) {
    RunConfig c = base;
    c.method = m;
    auto r = evaluate(c, pm, test);
    if (f.no_timing) r.t_train_s = r.t_test_ms = 0.0;
    reports.push_back(std::move(r));
  }
  write_output(f.out, emit_report(reports, g.format.empty() ? "json" : g.format));
  return 0;
}

// ---- oracle-check

struct OracleFlags {
  std::size_t classes = 10;
  std::size_t draws = 1000;
  std::string utility = "fbeta:beta=1";
  double tolerance = 1e-12;
};

int run_oracle_check(const Globals& g, const OracleFlags& f) {
  const UtilitySpec spec = UtilitySpec::parse(f.utility, f.classes);
  const SetPredictor predictor(spec, f.classes);
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (const auto& d : dirichlet_dists(f.classes, f.draws, g.seed)) {
    auto provider = SortedListProvider::from_dist(d);
    const auto fast = predictor.predict(provider);
    const auto exact = brute_force_bayes(d, spec);
    const double diff = std::fabs(fast.utility_value - exact.utility_value);
    worst = std::max(worst, diff);
    mismatches += diff > f.tolerance;
  }
  std::cout << "oracle-check " << spec.to_string() << " K=" << f.classes << " draws=" << f.draws
            << " max_abs_diff=" << worst << " mismatches=" << mismatches << "\n";
  if (mismatches) throw Error(ErrorCode::InvariantViolation, std::to_string(mismatches) + " draws disagree with the oracle");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set-valued Bayes-optimal prediction: train, index, predict and evaluate"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every stochastic step")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "Output format: json, csv or text")->check(CLI::IsMember({"json", "csv", "text"}));

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "Generate synthetic data");
  synth->add_option("--kind", sf.kind, "blobs or dirichlet")->capture_default_str();
  synth->add_option("--classes", sf.classes, "Number of classes")->capture_default_str();
  synth->add_option("--dim", sf.dim, "Feature dimension (blobs)")->capture_default_str();
  synth->add_option("--n", sf.n, "Examples or draws")->capture_default_str();
  synth->add_option("--n-test", sf.n_test, "Test examples (blobs; defaults to --n)");
  synth->add_option("--separation", sf.separation, "Norm of the class means")->capture_default_str();
  synth->add_option("--noise", sf.noise, "Per-feature standard deviation")->capture_default_str();
  synth->add_option("--concentration", sf.concentration, "Dirichlet concentration")->capture_default_str();
  synth->add_option("--out", sf.out, "Output path, - for stdout")->capture_default_str();
  synth->add_option("--test-out", sf.test_out, "Also write a test split here (blobs)");

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "Train a model bundle from SVMlight data");
  train->add_option("--data", tf.data, "Training data")->required();
  train->add_option("--base", tf.base, "Feature index base (0 or 1)")->capture_default_str();
  train->add_option("--out", tf.out, "Bundle directory")->required();
  add_model_flags(train, tf.model);
  train->add_option("--tree", tf.model.tree, "none, flat, 2means, huffman, random or file")->capture_default_str();
  train->add_option("--tree-file", tf.model.tree_file, "Hierarchy file for --tree file");
  train->add_flag("--index", tf.model.index, "Also build the HNSW index");

  TrainFlags bf;
  auto* tree_build = app.add_subcommand("tree-build", "Build a label tree and write it as text");
  tree_build->add_option("--data", bf.data, "Training data")->required();
  tree_build->add_option("--base", bf.base, "Feature index base (0 or 1)")->capture_default_str();
  tree_build->add_option("--out", bf.out, "Output path, - for stdout")->capture_default_str();
  tree_build->add_option("--kind", bf.model.tree, "2means, huffman, random or flat");
  add_model_flags(tree_build, bf.model);
  bf.out = "-";

  TrainFlags xf;
  auto* index_build = app.add_subcommand("index-build", "Add an HNSW index to a bundle");
  index_build->add_option("--bundle", xf.out, "Bundle directory")->required();
  add_model_flags(index_build, xf.model);

  PredictFlags pf;
  auto* predict = app.add_subcommand("predict", "Predict sets for SVMlight data");
  predict->add_option("--bundle", pf.bundle, "Bundle directory")->required();
  predict->add_option("--data", pf.data, "Examples to predict")->required();
  predict->add_option("--base", pf.base, "Feature index base (0 or 1)")->capture_default_str();
  predict->add_option("--method", pf.method, "svbop_full, svbop_hsg, svbop_hf, top_s, threshold, icp or oracle")
      ->capture_default_str();
  predict->add_option("--utility", pf.utility, "Utility, e.g. fbeta:beta=1 or credal:delta=2.2,gamma=1.2")
      ->capture_default_str();
  predict->add_option("--s", pf.s, "Set size for top_s")->capture_default_str();
  auto* p_theta = predict->add_option("--theta", pf.theta, "Mass threshold for threshold");
  predict->add_option("--icp", pf.icp, "epsilon=<value> for icp");
  predict->add_option("--calib", pf.calib, "Calibration data for icp");
  predict->add_option("--k0", pf.k0, "Initial HSG retrieval size")->capture_default_str();
  predict->add_option("--ef-search", pf.ef_search, "HSG candidate list (0: current k)")->capture_default_str();
  predict->add_option("--out", pf.out, "Output path, - for stdout")->capture_default_str();

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "Train on one file, evaluate methods on another");
  eval->add_option("--train", ef.train, "Training data")->required();
  eval->add_option("--test", ef.test, "Test data")->required();
  eval->add_option("--base", ef.base, "Feature index base (0 or 1)")->capture_default_str();
  eval->add_option("--method", ef.methods, "Method(s) to evaluate; repeatable");
  eval->add_option("--utility", ef.utility, "Utility used for prediction and scoring")->capture_default_str();
  eval->add_option("--s", ef.s, "Set size for top_s")->capture_default_str();
  auto* e_theta = eval->add_option("--theta", ef.theta, "Fixed threshold (tuned on the holdout when absent)");
  eval->add_option("--icp", ef.icp, "epsilon=<value> for icp");
  eval->add_option("--val-split", ef.val_split, "Holdout fraction for tuning and calibration (default 0.2)");
  eval->add_option("--calib-split", ef.calib_split, "Same holdout, under its conformal name");
  eval->add_option("--k0", ef.k0, "Initial HSG retrieval size")->capture_default_str();
  eval->add_option("--ef-search", ef.ef_search, "HSG candidate list (0: current k)")->capture_default_str();
  eval->add_option("--passes", ef.passes, "Timing passes (median reported)")->capture_default_str();
  eval->add_flag("--no-timing", ef.no_timing, "Report zero timings (for byte comparisons)");
  eval->add_flag("--records", ef.records, "Include per-example records (json)");
  eval->add_option("--out", ef.out, "Output path, - for stdout")->capture_default_str();
  eval->add_option("--tree", ef.model.tree, "Tree for svbop_hf: flat, 2means, huffman, random or file")
      ->capture_default_str();
  eval->add_option("--tree-file", ef.model.tree_file, "Hierarchy file");
  add_model_flags(eval, ef.model);

  OracleFlags of;
  auto* oracle = app.add_subcommand("oracle-check", "Compare early-stopping inference with exhaustive search");
  oracle->add_option("--classes", of.classes, "Number of classes (<= 22)")->capture_default_str();
  oracle->add_option("--draws", of.draws, "Dirichlet draws")->capture_default_str();
  oracle->add_option("--utility", of.utility, "Utility")->capture_default_str();
  oracle->add_option("--tolerance", of.tolerance, "Allowed absolute utility difference")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    kernels::set_threads(g.threads);
    if (*synth) return run_synth(g, sf);
    if (*train) return run_train(g, tf);
    if (*tree_build) return run_tree_build(g, bf);
    if (*index_build) return run_index_build(g, xf);
    if (*predict) return run_predict(g, pf, p_theta->count() > 0);
    if (*eval) return run_eval(g, ef, e_theta->count() > 0);
    if (*oracle) return run_oracle_check(g, of);
  } catch (const Error& e) {
    std::cerr << "svp: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "svp: internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
