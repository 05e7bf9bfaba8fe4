#pragma once

#include <span>
#include <vector>

#include "svp/distribution.hpp"
#include "svp/linear.hpp"

namespace svp {

/// Nonconformity scores 1 - P(y_i | x_i) of a held-out set, ascending.
class CalibrationTable {
 public:
  /// Takes P(y_i | x_i) for each calibration example. Throws EmptyCalibration
  /// on an empty span and InvalidParams outside [0, 1].
  static CalibrationTable from_true_class_probs(std::span<const double> probs);

  std::size_t size() const { return scores_.size(); }
  std::span<const double> scores() const { return scores_; }

  /// (#{alpha_i >= 1 - p} + 1) / (n + 1) for a candidate with probability p.
  double p_value(double prob) const;

 private:
  std::vector<double> scores_;
};

/// The caller keeps `calib` disjoint from the training data.
CalibrationTable icp_calibrate(const LinearModel& model, const Dataset& calib);

/// Classes whose p-value exceeds epsilon, listed in mass_order. May be empty.
PredictionSet icp_predict(const CalibrationTable& table, const ClassDist& dist, double epsilon);

PredictionSet icp_predict(const LinearModel& model, const CalibrationTable& table, const SparseVector& x,
                          double epsilon);

}  // namespace svp
