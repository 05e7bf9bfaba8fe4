#include "svp/linear.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <numeric>

#include "svp/error.hpp"
#include "svp/kernels.hpp"

namespace svp {

LinearModel::LinearModel(std::size_t num_outputs, std::size_t dim, bool has_bias)
    : num_outputs_(num_outputs),
      dim_(dim),
      has_bias_(has_bias),
      params_(num_outputs * dim + num_outputs, 0.0) {}

std::size_t LinearModel::nonzero_weights() const {
  auto w = weights();
  return static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double v) { return v != 0.0; }));
}

void LinearModel::check_input(const SparseVector& x) const {
  if (x.min_dim() > dim_) {
    throw Error(ErrorCode::DimensionMismatch, "feature index " + std::to_string(x.min_dim() - 1) +
                                                  " outside model dimension " + std::to_string(dim_));
  }
}

bool operator==(const LinearModel& a, const LinearModel& b) {
  return a.num_outputs_ == b.num_outputs_ && a.dim_ == b.dim_ && a.has_bias_ == b.has_bias_ &&
         a.params_ == b.params_ && a.meta.C == b.meta.C && a.meta.eps_l == b.meta.eps_l &&
         a.meta.prune_eta == b.meta.prune_eta;
}

double softmax_objective(const LinearModel& model, const ExampleView& data, double C,
                         std::span<double> gradient, bool parallel) {
  double loss = parallel ? kernels::cross_entropy_gradient_parallel(model, data, gradient)
                         : kernels::cross_entropy_gradient_serial(model, data, gradient);
  const auto w = model.weights();
  const double inv_c = 1.0 / C;
  double reg = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    reg += w[j] * w[j];
    gradient[j] += inv_c * w[j];
  }
  return loss + 0.5 * inv_c * reg;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Correction {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

// L-BFGS with Armijo backtracking on the regularized softmax objective.
void minimize(LinearModel& model, const ExampleView& data, const TrainOptions& opt) {
  constexpr std::size_t kHistory = 10;
  constexpr double kArmijo = 1e-4;
  const std::size_t n = model.params().size();

  std::vector<double> grad(n), new_grad(n), direction(n), alpha(kHistory);
  std::vector<double> x0(n);
  double f = softmax_objective(model, data, opt.C, grad, opt.parallel);
  std::deque<Correction> history;

  for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
    // Two-loop recursion: direction = -H * grad.
    for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
    for (std::size_t h = history.size(); h-- > 0;) {
      alpha[h] = history[h].rho * dot(history[h].s, direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] -= alpha[h] * history[h].y[i];
    }
    if (!history.empty()) {
      const auto& last = history.back();
      const double scale = 1.0 / (last.rho * dot(last.y, last.y));
      for (double& v : direction) v *= scale;
    } else {
      const double gnorm = std::sqrt(dot(grad, grad));
      if (gnorm == 0.0) return;
      const double scale = 1.0 / std::max(1.0, gnorm);
      for (double& v : direction) v *= scale;
    }
    for (std::size_t h = 0; h < history.size(); ++h) {
      const double beta = history[h].rho * dot(history[h].y, direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] += (alpha[h] - beta) * history[h].s[i];
    }

    double slope = dot(grad, direction);
    if (!(slope < 0.0)) {
      history.clear();
      for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
      slope = dot(grad, direction);
      if (slope == 0.0) return;
    }

    auto params = model.params();
    std::copy(params.begin(), params.end(), x0.begin());
    double step = 1.0;
    double new_f = 0.0;
    bool accepted = false;
    for (int trial = 0; trial < 50; ++trial) {
      for (std::size_t i = 0; i < n; ++i) params[i] = x0[i] + step * direction[i];
      new_f = softmax_objective(model, data, opt.C, new_grad, opt.parallel);
      if (std::isfinite(new_f) && new_f <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      std::copy(x0.begin(), x0.end(), params.begin());
      return;
    }

    Correction corr{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      corr.s[i] = params[i] - x0[i];
      corr.y[i] = new_grad[i] - grad[i];
    }
    const double sy = dot(corr.s, corr.y);
    if (sy > 1e-12) {
      corr.rho = 1.0 / sy;
      history.push_back(std::move(corr));
      if (history.size() > kHistory) history.pop_front();
    }

    const double decrease = (f - new_f) / std::max(std::fabs(f), 1.0);
    f = new_f;
    grad.swap(new_grad);
    if (decrease < opt.eps_l) return;
  }
}

}  // namespace

LinearModel train_softmax(const ExampleView& data, const TrainOptions& options) {
  if (!(options.C > 0.0)) throw Error(ErrorCode::InvalidParams, "C must be positive");
  if (data.num_outputs < 2) throw Error(ErrorCode::InvalidParams, "need at least 2 outputs");
  LinearModel model(data.num_outputs, data.dim, options.bias);
  model.meta.C = options.C;
  model.meta.eps_l = options.eps_l;
  if (data.size() > 0) minimize(model, data, options);
  return model;
}

LinearModel train_flat(const Dataset& data, const TrainOptions& options) {
  if (data.num_classes < 2) throw Error(ErrorCode::InvalidParams, "need at least 2 classes");
  if (!(options.C > 0.0)) throw Error(ErrorCode::InvalidParams, "C must be positive");
  data.validate();

  std::vector<std::size_t> counts(data.num_classes, 0);
  for (ClassId y : data.y) ++counts[static_cast<std::size_t>(y)];
  std::vector<ClassId> compact(data.num_classes, -1);
  std::vector<std::size_t> present;
  for (std::size_t c = 0; c < data.num_classes; ++c) {
    if (counts[c] > 0) {
      compact[c] = static_cast<ClassId>(present.size());
      present.push_back(c);
    }
  }
  if (present.size() == data.num_classes) return train_softmax(ExampleView::of(data), options);

  std::cerr << "warning: " << (data.num_classes - present.size())
            << " class(es) have no training examples; they get prior-only weights\n";
  if (present.size() < 2) {
    throw Error(ErrorCode::DegenerateData, "fewer than 2 classes have training examples");
  }
  ExampleView view = ExampleView::of(data);
  view.num_outputs = present.size();
  for (auto& y : view.y) y = compact[static_cast<std::size_t>(y)];
  LinearModel inner = train_softmax(view, options);

  LinearModel model(data.num_classes, data.dim, options.bias);
  model.meta = inner.meta;
  double min_bias = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < present.size(); ++i) {
    auto src = inner.row(i);
    std::copy(src.begin(), src.end(), model.row(present[i]).begin());
    if (options.bias) {
      model.bias(present[i]) = inner.bias(i);
      min_bias = std::min(min_bias, inner.bias(i));
    }
  }
  // Unseen classes: zero weights and a bias below every trained class, scaled
  // like an add-one prior on n examples.
  if (options.bias) {
    const double unseen = min_bias - std::log(static_cast<double>(data.size()) + 1.0);
    for (std::size_t c = 0; c < data.num_classes; ++c) {
      if (counts[c] == 0) model.bias(c) = unseen;
    }
  }
  return model;
}

LinearModel prune_weights(const LinearModel& model, double eta) {
  if (!(eta >= 0.0)) throw Error(ErrorCode::InvalidParams, "eta must be non-negative");
  LinearModel out = model;
  for (double& w : out.params()) {
    if (std::fabs(w) < eta) w = 0.0;
  }
  out.meta.prune_eta = eta;
  return out;
}

std::vector<double> predict_scores(const LinearModel& model, const SparseVector& x) {
  model.check_input(x);
  std::vector<double> out(model.num_outputs());
  kernels::scores_serial(model, x, out);
  return out;
}

ClassDist predict_proba(const LinearModel& model, const SparseVector& x) {
  auto s = predict_scores(model, x);
  kernels::softmax(s);
  return ClassDist(std::move(s));
}

}  // namespace svp
