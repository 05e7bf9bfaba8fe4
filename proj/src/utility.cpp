#include "svp/utility.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "svp/error.hpp"

namespace svp {

namespace {

constexpr std::size_t kUnboundedValidationSizes = 1000;

bool leq_tol(double a, double b) {
  return a <= b + kSequenceTolerance * std::max(std::fabs(a), std::fabs(b));
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view text) {
  std::string t = trim(text);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw Error(ErrorCode::InvalidParams,
                "bad value for '" + std::string(key) + "': '" + t + "'");
  }
  return v;
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

const char* to_string(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::precision: return "precision";
    case UtilityKind::recall: return "recall";
    case UtilityKind::fbeta: return "fbeta";
    case UtilityKind::credal: return "credal";
    case UtilityKind::exponential: return "exponential";
    case UtilityKind::logarithmic: return "logarithmic";
    case UtilityKind::reject: return "reject";
    case UtilityKind::gen_reject: return "genreject";
  }
  return "?";
}

UtilitySpec::UtilitySpec(UtilityKind kind, UtilityParams params, std::optional<std::size_t> k)
    : kind_(kind), params_(params), k_(k) {
  validate();
}

UtilitySpec UtilitySpec::precision(std::optional<std::size_t> k) {
  return {UtilityKind::precision, {}, k};
}
UtilitySpec UtilitySpec::recall(std::optional<std::size_t> k) {
  return {UtilityKind::recall, {}, k};
}
UtilitySpec UtilitySpec::fbeta(double beta, std::optional<std::size_t> k) {
  UtilityParams p;
  p.beta = beta;
  return {UtilityKind::fbeta, p, k};
}
UtilitySpec UtilitySpec::credal(double delta, double gamma, std::optional<std::size_t> k) {
  UtilityParams p;
  p.delta = delta;
  p.gamma = gamma;
  return {UtilityKind::credal, p, k};
}
UtilitySpec UtilitySpec::exponential(double delta, std::optional<std::size_t> k) {
  UtilityParams p;
  p.delta = delta;
  return {UtilityKind::exponential, p, k};
}
UtilitySpec UtilitySpec::logarithmic(std::optional<std::size_t> k) {
  return {UtilityKind::logarithmic, {}, k};
}
UtilitySpec UtilitySpec::reject(double alpha, std::size_t k) {
  UtilityParams p;
  p.alpha = alpha;
  return {UtilityKind::reject, p, k};
}
UtilitySpec UtilitySpec::gen_reject(double alpha, double beta, std::size_t k) {
  UtilityParams p;
  p.alpha = alpha;
  p.beta = beta;
  return {UtilityKind::gen_reject, p, k};
}

UtilitySpec UtilitySpec::with_num_classes(std::size_t k) const {
  UtilitySpec copy = *this;
  copy.k_ = k;
  copy.validate();
  return copy;
}

namespace {
constexpr double kRangeSlack = 1e-12;
}  // namespace

void UtilitySpec::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidParams, msg); };
  auto finite = [](double v) { return std::isfinite(v); };
  if (k_ && *k_ == 0) bad("number of classes must be positive");
  if (!finite(scale_) || scale_ <= 0.0) bad("scale must be positive");
  switch (kind_) {
    case UtilityKind::precision:
    case UtilityKind::recall:
    case UtilityKind::logarithmic:
      break;
    case UtilityKind::fbeta:
      if (!finite(params_.beta) || params_.beta <= 0.0) bad("fbeta needs beta > 0");
      break;
    case UtilityKind::credal:
      if (!finite(params_.delta) || !finite(params_.gamma)) bad("credal needs finite delta, gamma");
      break;
    case UtilityKind::exponential:
      if (!finite(params_.delta) || params_.delta <= 0.0) bad("exponential needs delta > 0");
      break;
    case UtilityKind::reject:
      if (!k_ || *k_ < 2) bad("reject needs k >= 2");
      if (!finite(params_.alpha) || params_.alpha < 0.0 || params_.alpha > 1.0)
        bad("reject needs alpha in [0,1]");
      break;
    case UtilityKind::gen_reject:
      if (!k_ || *k_ < 2) bad("genreject needs k >= 2");
      if (!finite(params_.alpha) || params_.alpha < 0.0 || params_.alpha > 1.0)
        bad("genreject needs alpha in [0,1]");
      if (!finite(params_.beta) || params_.beta <= 0.0) bad("genreject needs beta > 0");
      break;
  }
  if (kind_ == UtilityKind::reject) {
    for (std::size_t s : {std::size_t{1}, *k_}) {
      double v = raw_g(s) * scale_;
      if (!(v >= -kRangeSlack && v <= 1.0 + kRangeSlack)) bad("g(" + std::to_string(s) + ") outside [0,1]");
    }
    return;
  }
  std::size_t n = k_.value_or(kUnboundedValidationSizes);
  for (std::size_t s = 1; s <= n; ++s) {
    double v = raw_g(s) * scale_;
    if (!(v >= -kRangeSlack && v <= 1.0 + kRangeSlack)) {
      std::ostringstream os;
      os << to_string() << ": g(" << s << ") = " << v << " outside [0,1]";
      bad(os.str());
    }
  }
}

double UtilitySpec::raw_g(std::size_t s) const {
  const double x = static_cast<double>(s);
  switch (kind_) {
    case UtilityKind::precision:
      return 1.0 / x;
    case UtilityKind::recall:
      return 1.0;
    case UtilityKind::fbeta: {
      const double b2 = params_.beta * params_.beta;
      return (1.0 + b2) / (b2 + x);
    }
    case UtilityKind::credal:
      return params_.delta / x - params_.gamma / (x * x);
    case UtilityKind::exponential:
      return 1.0 - std::exp(-params_.delta / x);
    case UtilityKind::logarithmic:
      return std::log1p(1.0 / x);
    case UtilityKind::reject:
      if (s == 1) return 1.0;
      if (s == *k_) return 1.0 - params_.alpha;
      throw Error(ErrorCode::UndefinedAtSize,
                  "reject utility defined only at s=1 and s=K, got s=" + std::to_string(s));
    case UtilityKind::gen_reject: {
      const double ratio = (x - 1.0) / (static_cast<double>(*k_) - 1.0);
      return 1.0 - params_.alpha * std::pow(ratio, params_.beta);
    }
  }
  return 0.0;
}

double UtilitySpec::g(std::size_t s) const {
  if (s == 0 || (k_ && s > *k_)) {
    throw Error(ErrorCode::SizeOutOfRange, "set size " + std::to_string(s) + " out of range");
  }
  // Parameters like delta=2.2, gamma=1.2 give g(1) = 1 + 2e-16.
  return std::clamp(raw_g(s) * scale_, 0.0, 1.0);
}

double UtilitySpec::u(ClassId true_class, std::span<const ClassId> pred) const {
  if (pred.empty()) throw Error(ErrorCode::EmptyPrediction, "prediction set is empty");
  if (std::find(pred.begin(), pred.end(), true_class) == pred.end()) return 0.0;
  return g(pred.size());
}

std::vector<double> UtilitySpec::table(std::size_t k) const {
  std::vector<double> out(k);
  for (std::size_t s = 1; s <= k; ++s) out[s - 1] = g(s);
  return out;
}

std::string UtilitySpec::to_string() const {
  std::ostringstream os;
  os << svp::to_string(kind_);
  switch (kind_) {
    case UtilityKind::fbeta: os << ":beta=" << num(params_.beta); break;
    case UtilityKind::credal: os << ":delta=" << num(params_.delta) << ",gamma=" << num(params_.gamma); break;
    case UtilityKind::exponential: os << ":delta=" << num(params_.delta); break;
    case UtilityKind::reject: os << ":alpha=" << num(params_.alpha); break;
    case UtilityKind::gen_reject: os << ":alpha=" << num(params_.alpha) << ",beta=" << num(params_.beta); break;
    default: break;
  }
  if (scale_ != 1.0) {
    os << (kind_ == UtilityKind::precision || kind_ == UtilityKind::recall ||
                   kind_ == UtilityKind::logarithmic
               ? ":"
               : ",")
       << "normalized=1";
  }
  return os.str();
}

bool operator==(const UtilitySpec& a, const UtilitySpec& b) {
  return a.kind_ == b.kind_ && a.params_.alpha == b.params_.alpha &&
         a.params_.beta == b.params_.beta && a.params_.delta == b.params_.delta &&
         a.params_.gamma == b.params_.gamma && a.k_ == b.k_ && a.scale_ == b.scale_;
}

UtilitySpec UtilitySpec::parse(std::string_view text, std::optional<std::size_t> k) {
  std::string s = trim(text);
  std::string name = s;
  std::string rest;
  if (auto colon = s.find(':'); colon != std::string::npos) {
    name = trim(std::string_view(s).substr(0, colon));
    rest = s.substr(colon + 1);
  }
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  name.erase(std::remove(name.begin(), name.end(), '_'), name.end());

  UtilityKind kind;
  if (name == "precision") kind = UtilityKind::precision;
  else if (name == "recall") kind = UtilityKind::recall;
  else if (name == "fbeta" || name == "f") kind = UtilityKind::fbeta;
  else if (name == "f1") kind = UtilityKind::fbeta;
  else if (name == "credal") kind = UtilityKind::credal;
  else if (name == "exponential" || name == "exp") kind = UtilityKind::exponential;
  else if (name == "logarithmic" || name == "log") kind = UtilityKind::logarithmic;
  else if (name == "reject") kind = UtilityKind::reject;
  else if (name == "genreject") kind = UtilityKind::gen_reject;
  else throw Error(ErrorCode::InvalidParams, "unknown utility kind '" + name + "'");

  UtilityParams p;
  bool seen_beta = false;
  bool seen_delta = false;
  bool seen_gamma = false;
  bool seen_alpha = false;
  bool normalize = false;
  std::size_t pos = 0;
  while (pos < rest.size()) {
    std::size_t comma = rest.find(',', pos);
    std::string item = trim(std::string_view(rest).substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos));
    pos = comma == std::string::npos ? rest.size() : comma + 1;
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidParams, "expected key=value, got '" + item + "'");
    }
    std::string key = trim(std::string_view(item).substr(0, eq));
    std::string_view val = std::string_view(item).substr(eq + 1);
    if (key == "beta") { p.beta = parse_double(key, val); seen_beta = true; }
    else if (key == "delta") { p.delta = parse_double(key, val); seen_delta = true; }
    else if (key == "gamma") { p.gamma = parse_double(key, val); seen_gamma = true; }
    else if (key == "alpha") { p.alpha = parse_double(key, val); seen_alpha = true; }
    else if (key == "normalized") { normalize = parse_double(key, val) != 0.0; }
    else throw Error(ErrorCode::InvalidParams, "unknown utility parameter '" + key + "'");
  }

  auto require = [&](bool seen, const char* key) {
    if (!seen) {
      throw Error(ErrorCode::InvalidParams,
                  std::string(svp::to_string(kind)) + " requires parameter '" + key + "'");
    }
  };
  switch (kind) {
    case UtilityKind::fbeta:
      if (name == "f1") p.beta = 1.0;
      else require(seen_beta, "beta");
      break;
    case UtilityKind::credal:
      require(seen_delta, "delta");
      require(seen_gamma, "gamma");
      break;
    case UtilityKind::exponential:
      require(seen_delta, "delta");
      break;
    case UtilityKind::reject:
      require(seen_alpha, "alpha");
      break;
    case UtilityKind::gen_reject:
      require(seen_alpha, "alpha");
      require(seen_beta, "beta");
      break;
    default:
      break;
  }
  if ((kind == UtilityKind::reject || kind == UtilityKind::gen_reject) && !k) {
    throw Error(ErrorCode::InvalidParams,
                std::string(svp::to_string(kind)) + " needs the number of classes");
  }
  UtilitySpec spec(kind, p, k);
  return normalize ? normalized(spec) : spec;
}

UtilitySpec normalized(const UtilitySpec& spec) {
  UtilitySpec out = spec;
  double g1 = spec.raw_g(1);
  if (!(g1 > 0.0)) throw Error(ErrorCode::NonPositiveG, "cannot rescale: g(1) <= 0");
  out.scale_ = 1.0 / g1;
  out.validate();
  return out;
}

double eval_g(const UtilitySpec& spec, std::size_t s) { return spec.g(s); }

double eval_u(const UtilitySpec& spec, ClassId true_class, std::span<const ClassId> pred) {
  return spec.u(true_class, pred);
}

bool is_strictly_decreasing(const UtilitySpec& spec, std::size_t k) {
  for (std::size_t s = 1; s + 1 <= k; ++s) {
    if (!(spec.g(s) > spec.g(s + 1))) return false;
  }
  return true;
}

bool is_one_over_x_convex(const UtilitySpec& spec, std::size_t k) {
  if (k < 3) return true;
  std::vector<double> inv(k);
  for (std::size_t s = 1; s <= k; ++s) {
    double v = spec.g(s);
    if (!(v > 0.0)) {
      throw Error(ErrorCode::NonPositiveG, "g(" + std::to_string(s) + ") <= 0");
    }
    inv[s - 1] = 1.0 / v;
  }
  for (std::size_t i = 0; i + 2 < k; ++i) {
    if (!leq_tol(inv[i + 1], 0.5 * (inv[i] + inv[i + 2]))) return false;
  }
  return true;
}

bool is_concave(const UtilitySpec& spec, std::size_t k) {
  for (std::size_t s = 1; s + 2 <= k; ++s) {
    if (!leq_tol(0.5 * (spec.g(s) + spec.g(s + 2)), spec.g(s + 1))) return false;
  }
  return true;
}

bool dominates_precision(const UtilitySpec& spec, std::size_t k) {
  double g1 = spec.g(1);
  if (std::fabs(g1 - 1.0) > kSequenceTolerance) {
    throw Error(ErrorCode::NotNormalized,
                "g(1) = " + std::to_string(g1) + "; rescale with normalized() first");
  }
  for (std::size_t s = 2; s <= k; ++s) {
    if (!leq_tol(1.0 / static_cast<double>(s), spec.g(s))) return false;
  }
  return true;
}

GenRejectRegion gen_reject_admissible_region(std::size_t k) {
  const double kd = static_cast<double>(k);
  // With k <= 2 the only size above 1 is k itself, so any beta > 0 works.
  if (k <= 2) return {(kd - 1.0) / kd, 0.0};
  // log base 1/(k-1) of k/2
  const double beta_min = std::log(kd / 2.0) / std::log(1.0 / (kd - 1.0)) + 1.0;
  return {(kd - 1.0) / kd, beta_min};
}

}  // namespace svp
