#include "svp/conformal.hpp"

#include <algorithm>

#include "svp/error.hpp"

namespace svp {

CalibrationTable CalibrationTable::from_true_class_probs(std::span<const double> probs) {
  if (probs.empty()) throw Error(ErrorCode::EmptyCalibration, "calibration set is empty");
  CalibrationTable t;
  t.scores_.reserve(probs.size());
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidParams, "probability outside [0,1]");
    t.scores_.push_back(1.0 - p);
  }
  std::sort(t.scores_.begin(), t.scores_.end());
  return t;
}

double CalibrationTable::p_value(double prob) const {
  const double alpha = 1.0 - prob;
  const auto first = std::lower_bound(scores_.begin(), scores_.end(), alpha);
  const auto at_least = static_cast<double>(scores_.end() - first);
  return (at_least + 1.0) / (static_cast<double>(scores_.size()) + 1.0);
}

CalibrationTable icp_calibrate(const LinearModel& model, const Dataset& calib) {
  if (calib.size() == 0) throw Error(ErrorCode::EmptyCalibration, "calibration set is empty");
  std::vector<double> probs(calib.size());
  for (std::size_t i = 0; i < calib.size(); ++i) {
    probs[i] = predict_proba(model, calib.x[i]).mass(calib.y[i]);
  }
  return CalibrationTable::from_true_class_probs(probs);
}

PredictionSet icp_predict(const CalibrationTable& table, const ClassDist& dist, double epsilon) {
  PredictionSet out;
  for (const auto& e : dist.sorted()) {
    // p-values fall as mass falls, so the set is a mass-sorted prefix.
    if (!(table.p_value(e.mass) > epsilon)) break;
    out.classes.push_back(e.id);
    out.cum_mass += e.mass;
  }
  out.steps_queried = dist.num_classes();
  return out;
}

PredictionSet icp_predict(const LinearModel& model, const CalibrationTable& table, const SparseVector& x,
                          double epsilon) {
  return icp_predict(table, predict_proba(model, x), epsilon);
}

}  // namespace svp
