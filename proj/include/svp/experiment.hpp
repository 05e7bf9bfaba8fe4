#pragma once

#include <optional>
#include <string>
#include <vector>

#include "svp/bundle.hpp"
#include "svp/conformal.hpp"
#include "svp/error.hpp"
#include "svp/hnsw.hpp"
#include "svp/inference.hpp"
#include "svp/utility.hpp"

namespace svp {

enum class Method { svbop_full, svbop_hsg, svbop_hf, top_s, threshold, icp, oracle };

const char* to_string(Method m);
/// Throws InvalidParams for an unknown name.
Method parse_method(std::string_view name);

enum class TreeSource { flat, kmeans, huffman, random, file };

struct RunConfig {
  Method method = Method::svbop_full;
  UtilitySpec utility = UtilitySpec::fbeta(1.0);

  std::size_t s = 1;                 // top_s
  std::optional<double> theta;       // threshold; tuned on the holdout when unset
  double epsilon = 0.10;             // icp
  HsgOptions hsg;                    // svbop_hsg
  HnswParams hnsw;
  TreeSource tree_source = TreeSource::kmeans;
  std::string tree_path;             // TreeSource::file
  std::size_t max_leaf = 20;
  double eps_c = 0.001;

  TrainOptions train;
  double prune_eta = 0.0;
  /// Fraction of training rows held out for threshold tuning and ICP
  /// calibration. The model is always fitted on the rest.
  double holdout = 0.2;
  std::uint64_t seed = 0;

  int timing_passes = 3;
  bool keep_records = false;

  /// Throws ConfigConflict or InvalidParams.
  void validate() const;
};

struct ExampleRecord {
  ClassId y;
  std::vector<ClassId> prediction;
  double utility;

  friend bool operator==(const ExampleRecord&, const ExampleRecord&) = default;
};

struct MetricsReport {
  std::string method;
  std::string utility;
  std::size_t num_classes = 0;
  std::size_t n_test = 0;
  double mean_utility = 0.0;
  double mean_recall = 0.0;
  double mean_size = 0.0;
  double top1_accuracy = 0.0;
  std::size_t empty_sets = 0;
  double t_train_s = 0.0;
  double t_test_ms = 0.0;
  std::optional<double> theta;
  std::vector<ExampleRecord> records;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Realized utility; an empty set scores 0.
double realized_utility(const UtilitySpec& spec, ClassId y, std::span<const ClassId> pred);

/// Trained artifacts shared by every method of one run.
struct PreparedModel {
  ModelBundle bundle;
  std::optional<CalibrationTable> calibration;
  Dataset holdout;
  double t_train_s = 0.0;
};

/// Seeded split of `train` into fit and holdout rows; trains the flat model
/// and, when `with_tree` / `with_index`, the label tree and HNSW index.
PreparedModel prepare_model(const Dataset& train, const RunConfig& config, bool with_tree, bool with_index);

/// Ten equally spaced thresholds 0.1 .. 1.0, picked by mean realized
/// utility on `validation`; ties go to the smaller threshold.
double tune_threshold(const LinearModel& model, const Dataset& validation, const UtilitySpec& utility);

/// One set prediction with the configured method against a prepared model.
/// The predictor must be built for the same utility (svbop methods only).
PredictionSet predict_one(const RunConfig& config, const PreparedModel& model, const SetPredictor* predictor,
                          const SparseVector& x, double theta);

/// Evaluates `config.method` on `test` using an already prepared model.
MetricsReport evaluate(const RunConfig& config, const PreparedModel& model, const Dataset& test);

/// prepare_model + evaluate.
MetricsReport run_experiment(const RunConfig& config, const Dataset& train, const Dataset& test);

inline constexpr int kReportSchemaVersion = 1;

/// JSON (one object, or an array for several reports) or CSV with the header
/// method,utility,mean_utility,mean_recall,mean_size,top1_accuracy,t_train_s,t_test_ms
std::string emit_report(const std::vector<MetricsReport>& reports, std::string_view format);
std::vector<MetricsReport> parse_report_json(std::string_view text);

/// Process exit code for an error: 2 configuration, 3 data, 4 invariant.
int exit_code(ErrorCode code);

}  // namespace svp
