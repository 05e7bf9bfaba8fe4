#include "svp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "svp/error.hpp"
#include "svp/label_tree.hpp"
#include "svp/provider_full.hpp"

namespace svp {

namespace {

constexpr const char* kMethodNames[] = {"svbop_full", "svbop_hsg", "svbop_hf", "top_s",
                                        "threshold",  "icp",       "oracle"};

bool is_svbop(Method m) { return m == Method::svbop_full || m == Method::svbop_hsg || m == Method::svbop_hf; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LabelTree make_tree(const Dataset& fit, const RunConfig& cfg) {
  switch (cfg.tree_source) {
    case TreeSource::flat: return flat_tree(fit.num_classes);
    case TreeSource::kmeans: return build_2means_tree(class_profiles(fit), cfg.max_leaf, cfg.eps_c, cfg.seed);
    case TreeSource::huffman: {
      std::vector<double> freq(fit.num_classes, 0.0);
      for (ClassId y : fit.y) freq[static_cast<std::size_t>(y)] += 1.0;
      return build_huffman_tree(freq);
    }
    case TreeSource::random: return random_binary_tree(fit.num_classes, cfg.seed);
    case TreeSource::file: {
      std::ifstream in(cfg.tree_path);
      if (!in) throw Error(ErrorCode::IoError, "cannot open " + cfg.tree_path);
      std::ostringstream ss;
      ss << in.rdbuf();
      return load_hierarchy(ss.str(), fit.num_classes);
    }
  }
  throw Error(ErrorCode::InvalidParams, "unknown tree source");
}

ClassId argmax_class(const RunConfig& cfg, const PreparedModel& pm, const SparseVector& x) {
  const auto& b = pm.bundle;
  if (cfg.method == Method::svbop_hf) return HfProvider(*b.tree, b.nodes, x).next()->id;
  if (cfg.method == Method::svbop_hsg) return HsgProvider(*b.flat, *b.index, x, cfg.hsg).next()->id;
  const auto s = predict_scores(*b.flat, x);
  return static_cast<ClassId>(std::max_element(s.begin(), s.end()) - s.begin());
}

}  // namespace

const char* to_string(Method m) { return kMethodNames[static_cast<int>(m)]; }

Method parse_method(std::string_view name) {
  for (int i = 0; i < 7; ++i)
    if (name == kMethodNames[i]) return static_cast<Method>(i);
  throw Error(ErrorCode::InvalidParams, "unknown method '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  if (s == 0) throw Error(ErrorCode::InvalidParams, "s must be at least 1");
  if (theta && !(*theta > 0.0)) throw Error(ErrorCode::ThetaOutOfRange, "theta must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw Error(ErrorCode::InvalidParams, "epsilon must be >= 0");
  if (!(holdout >= 0.0 && holdout < 1.0)) throw Error(ErrorCode::InvalidParams, "holdout must be in [0,1)");
  if (timing_passes < 1) throw Error(ErrorCode::InvalidParams, "timing passes must be >= 1");
  if (max_leaf == 0) throw Error(ErrorCode::InvalidParams, "max_leaf must be positive");
  if (hsg.k0 == 0) throw Error(ErrorCode::InvalidParams, "k0 must be positive");
  if ((tree_source == TreeSource::file) != !tree_path.empty()) {
    throw Error(ErrorCode::ConfigConflict, "a tree path goes with tree source 'file' only");
  }
  if (holdout == 0.0 && (method == Method::icp || (method == Method::threshold && !theta))) {
    throw Error(ErrorCode::ConfigConflict, std::string(to_string(method)) + " needs a holdout split");
  }
}

double realized_utility(const UtilitySpec& spec, ClassId y, std::span<const ClassId> pred) {
  return pred.empty() ? 0.0 : spec.u(y, pred);
}

PreparedModel prepare_model(const Dataset& train, const RunConfig& cfg, bool with_tree, bool with_index) {
  cfg.validate();
  train.validate();
  std::vector<std::size_t> rows(train.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto n_hold = static_cast<std::size_t>(std::llround(cfg.holdout * static_cast<double>(train.size())));
  std::vector<std::size_t> hold(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> fit_rows(rows.begin() + static_cast<std::ptrdiff_t>(n_hold), rows.end());
  std::sort(hold.begin(), hold.end());
  std::sort(fit_rows.begin(), fit_rows.end());
  const Dataset fit = train.subset(fit_rows);

  PreparedModel pm;
  pm.holdout = train.subset(hold);
  pm.bundle.labels = LabelMap::identity(train.num_classes);

  TrainOptions topt = cfg.train;
  topt.seed = cfg.seed;
  const auto t0 = std::chrono::steady_clock::now();
  LinearModel flat = train_flat(fit, topt);
  if (cfg.prune_eta > 0.0) flat = prune_weights(flat, cfg.prune_eta);
  if (with_tree) {
    LabelTree tree = make_tree(fit, cfg);
    LinearNodeModels nodes = train_tree_nodes(fit, tree, topt);
    if (cfg.prune_eta > 0.0) nodes = prune_weights(nodes, cfg.prune_eta);
    pm.bundle.tree = std::move(tree);
    pm.bundle.nodes = std::move(nodes);
  }
  if (with_index) pm.bundle.index = HnswIndex::build(flat, cfg.hnsw);
  pm.t_train_s = seconds_since(t0);
  pm.bundle.flat = std::move(flat);

  if (pm.holdout.size() > 0) pm.calibration = icp_calibrate(*pm.bundle.flat, pm.holdout);
  return pm;
}

double tune_threshold(const LinearModel& model, const Dataset& validation, const UtilitySpec& utility) {
  if (validation.size() == 0) throw Error(ErrorCode::EmptyInput, "empty validation set");
  std::vector<ClassDist> dists;
  dists.reserve(validation.size());
  for (const auto& x : validation.x) dists.push_back(predict_proba(model, x));
  double best_theta = 0.1;
  double best = -1.0;
  for (int i = 1; i <= 10; ++i) {
    const double theta = i / 10.0;
    double total = 0.0;
    for (std::size_t j = 0; j < dists.size(); ++j) {
      const auto set = threshold_predict(dists[j], theta);
      total += realized_utility(utility, validation.y[j], set.classes);
    }
    const double mean = total / static_cast<double>(dists.size());
    if (mean > best) {
      best = mean;
      best_theta = theta;
    }
  }
  return best_theta;
}

PredictionSet predict_one(const RunConfig& cfg, const PreparedModel& pm, const SetPredictor* predictor,
                          const SparseVector& x, double theta) {
  const auto& b = pm.bundle;
  switch (cfg.method) {
    case Method::svbop_full: {
      auto p = full_init(*b.flat, x, true);
      return predictor->predict(p);
    }
    case Method::svbop_hsg: {
      HsgProvider p(*b.flat, *b.index, x, cfg.hsg);
      return predictor->predict(p);
    }
    case Method::svbop_hf: {
      HfProvider p(*b.tree, b.nodes, x);
      return predictor->predict(p);
    }
    case Method::top_s: return top_s_predict(predict_proba(*b.flat, x), cfg.s);
    case Method::threshold: return threshold_predict(predict_proba(*b.flat, x), theta);
    case Method::icp: return icp_predict(*b.flat, *pm.calibration, x, cfg.epsilon);
    case Method::oracle: return brute_force_bayes(predict_proba(*b.flat, x), predictor->utility());
  }
  throw Error(ErrorCode::InvalidParams, "unknown method");
}

MetricsReport evaluate(const RunConfig& cfg, const PreparedModel& pm, const Dataset& test) {
  cfg.validate();
  test.validate();
  const std::size_t k = pm.bundle.num_classes();
  if (test.num_classes != k) {
    throw Error(ErrorCode::UniverseMismatch, "test data has " + std::to_string(test.num_classes) +
                                                 " classes, model has " + std::to_string(k));
  }
  const auto& b = pm.bundle;
  if (!b.flat) throw Error(ErrorCode::ConfigConflict, "bundle has no flat model");
  if (cfg.method == Method::svbop_hsg && !b.index) throw Error(ErrorCode::ConfigConflict, "svbop_hsg needs an index");
  if (cfg.method == Method::svbop_hf && !b.tree) throw Error(ErrorCode::ConfigConflict, "svbop_hf needs a label tree");
  if (cfg.method == Method::icp && !pm.calibration) throw Error(ErrorCode::ConfigConflict, "icp needs calibration data");
  if (cfg.method == Method::oracle && k > kMaxBruteForceClasses) {
    throw Error(ErrorCode::UniverseTooLarge, "oracle needs K <= " + std::to_string(kMaxBruteForceClasses));
  }
  for (const auto& x : test.x) b.flat->check_input(x);

  const UtilitySpec spec = cfg.utility.with_num_classes(k);
  std::optional<SetPredictor> predictor;
  if (is_svbop(cfg.method)) predictor.emplace(spec, k);
  if (cfg.method == Method::oracle) predictor.emplace(spec, k, SvbopOptions{.force_full_scan = true});

  MetricsReport r;
  r.method = to_string(cfg.method);
  r.utility = spec.to_string();
  r.num_classes = k;
  r.n_test = test.size();
  r.t_train_s = pm.t_train_s;

  double theta = 1.0;
  if (cfg.method == Method::threshold) {
    theta = cfg.theta ? *cfg.theta : tune_threshold(*b.flat, pm.holdout, spec);
    r.theta = theta;
  }

  const std::size_t n = test.size();
  std::vector<PredictionSet> preds(n);
  std::vector<double> pass_ms;
  const SetPredictor* pred_ptr = predictor ? &*predictor : nullptr;
  for (int pass = 0; pass < cfg.timing_passes; ++pass) {
    const auto t0 = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i) preds[i] = predict_one(cfg, pm, pred_ptr, test.x[i], theta);
    pass_ms.push_back(seconds_since(t0) * 1e3);
  }
  r.t_test_ms = n ? median(pass_ms) / static_cast<double>(n) : 0.0;

  std::vector<ClassId> top1(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n; ++i) top1[i] = argmax_class(cfg, pm, test.x[i]);

  double sum_u = 0.0, sum_recall = 0.0, sum_size = 0.0, sum_top1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& set = preds[i].classes;
    const double u = realized_utility(spec, test.y[i], set);
    sum_u += u;
    sum_recall += preds[i].contains(test.y[i]) ? 1.0 : 0.0;
    sum_size += static_cast<double>(set.size());
    sum_top1 += top1[i] == test.y[i] ? 1.0 : 0.0;
    r.empty_sets += set.empty();
    if (cfg.keep_records) r.records.push_back({test.y[i], set, u});
  }
  if (n) {
    const auto dn = static_cast<double>(n);
    r.mean_utility = sum_u / dn;
    r.mean_recall = sum_recall / dn;
    r.mean_size = sum_size / dn;
    r.top1_accuracy = sum_top1 / dn;
  }
  return r;
}

MetricsReport run_experiment(const RunConfig& cfg, const Dataset& train, const Dataset& test) {
  const bool tree = cfg.method == Method::svbop_hf;
  const bool index = cfg.method == Method::svbop_hsg;
  return evaluate(cfg, prepare_model(train, cfg, tree, index), test);
}

namespace {

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["method"] = r.method;
  j["utility"] = r.utility;
  j["num_classes"] = r.num_classes;
  j["n_test"] = r.n_test;
  j["mean_utility"] = r.mean_utility;
  j["mean_recall"] = r.mean_recall;
  j["mean_size"] = r.mean_size;
  j["top1_accuracy"] = r.top1_accuracy;
  j["empty_sets"] = r.empty_sets;
  j["t_train_s"] = r.t_train_s;
  j["t_test_ms"] = r.t_test_ms;
  j["theta"] = r.theta ? nlohmann::ordered_json(*r.theta) : nlohmann::ordered_json(nullptr);
  if (!r.records.empty()) {
    auto& recs = j["records"] = nlohmann::ordered_json::array();
    for (const auto& e : r.records) recs.push_back({{"y", e.y}, {"prediction", e.prediction}, {"utility", e.utility}});
  }
  return j;
}

MetricsReport from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
    throw Error(ErrorCode::FormatError, "unsupported report schema version");
  }
  MetricsReport r;
  r.method = j.at("method").get<std::string>();
  r.utility = j.at("utility").get<std::string>();
  r.num_classes = j.at("num_classes").get<std::size_t>();
  r.n_test = j.at("n_test").get<std::size_t>();
  r.mean_utility = j.at("mean_utility").get<double>();
  r.mean_recall = j.at("mean_recall").get<double>();
  r.mean_size = j.at("mean_size").get<double>();
  r.top1_accuracy = j.at("top1_accuracy").get<double>();
  r.empty_sets = j.at("empty_sets").get<std::size_t>();
  r.t_train_s = j.at("t_train_s").get<double>();
  r.t_test_ms = j.at("t_test_ms").get<double>();
  if (!j.at("theta").is_null()) r.theta = j.at("theta").get<double>();
  if (j.contains("records")) {
    for (const auto& e : j.at("records")) {
      r.records.push_back({e.at("y").get<ClassId>(), e.at("prediction").get<std::vector<ClassId>>(),
                           e.at("utility").get<double>()});
    }
  }
  return r;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string emit_report(const std::vector<MetricsReport>& reports, std::string_view format) {
  if (format == "json") {
    if (reports.size() == 1) return to_json(reports.front()).dump(2) + "\n";
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    return arr.dump(2) + "\n";
  }
  if (format == "csv") {
    std::string out = "method,utility,mean_utility,mean_recall,mean_size,top1_accuracy,t_train_s,t_test_ms\n";
    char buf[256];
    for (const auto& r : reports) {
      std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f,%.4f,%.6f,%.6f\n", r.mean_utility, r.mean_recall,
                    r.mean_size, r.top1_accuracy, r.t_train_s, r.t_test_ms);
      out += csv_field(r.method) + "," + csv_field(r.utility) + buf;
    }
    return out;
  }
  throw Error(ErrorCode::InvalidParams, "unknown report format '" + std::string(format) + "'");
}

std::vector<MetricsReport> parse_report_json(std::string_view text) {
  std::vector<MetricsReport> out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.is_array()) {
      for (const auto& e : j) out.push_back(from_json(e));
    } else {
      out.push_back(from_json(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("report: ") + e.what());
  }
  return out;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::SizeOutOfRange:
    case ErrorCode::UndefinedAtSize:
    case ErrorCode::InvalidParams:
    case ErrorCode::NonPositiveG:
    case ErrorCode::NotNormalized:
    case ErrorCode::UtilityNotSupported:
    case ErrorCode::ThetaOutOfRange:
    case ErrorCode::UniverseTooLarge:
    case ErrorCode::ConfigConflict:
      return 2;
    case ErrorCode::UniverseMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyInput:
    case ErrorCode::DegenerateData:
    case ErrorCode::MissingNodeModel:
    case ErrorCode::UnnormalizedNode:
    case ErrorCode::EmptyCalibration:
    case ErrorCode::CycleDetected:
    case ErrorCode::MultipleRoots:
    case ErrorCode::UnmappedClass:
    case ErrorCode::UnaryInternalNode:
    case ErrorCode::ParseError:
    case ErrorCode::NonMonotoneIndices:
    case ErrorCode::FormatError:
    case ErrorCode::IoError:
      return 3;
    case ErrorCode::EmptyPrediction:
    case ErrorCode::ProviderExhaustedEarly:
    case ErrorCode::NonMonotoneProvider:
    case ErrorCode::InvariantViolation:
      return 4;
  }
  return 4;
}

}  // namespace svp
