#include "rsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rsim {

namespace {

constexpr double kSearchRadius = 1e3;

bool all_finite(const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

// Smallest z in [-R, R] with f(z) >= target, for non-decreasing f.
template <class F>
std::optional<double> crossing(F&& f, double target) {
  double lo = -kSearchRadius, hi = kSearchRadius;
  if (f(hi) < target || f(lo) >= target) return std::nullopt;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) >= target) hi = mid; else lo = mid;
  }
  return hi;
}

double smooth_value(SmoothShape s, double u) {
  switch (s) {
    case SmoothShape::Tanh: return std::tanh(u);
    case SmoothShape::Logistic: return 1.0 / (1.0 + std::exp(-u));
    case SmoothShape::Erf: return std::erf(u);
  }
  return 0.0;
}

double smooth_slope(SmoothShape s, double u) {
  switch (s) {
    case SmoothShape::Tanh: {
      double t = std::tanh(u);
      return 1.0 - t * t;
    }
    case SmoothShape::Logistic: {
      double e = 1.0 / (1.0 + std::exp(-u));
      return e * (1.0 - e);
    }
    case SmoothShape::Erf: return 2.0 / std::sqrt(M_PI) * std::exp(-u * u);
  }
  return 0.0;
}

std::string shape_name(SmoothShape s) {
  switch (s) {
    case SmoothShape::Tanh: return "tanh";
    case SmoothShape::Logistic: return "logistic";
    case SmoothShape::Erf: return "erf";
  }
  return "?";
}

SmoothShape parse_shape(const std::string& s) {
  if (s == "tanh") return SmoothShape::Tanh;
  if (s == "logistic") return SmoothShape::Logistic;
  if (s == "erf") return SmoothShape::Erf;
  throw Error("unknown smooth shape: " + s);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void RegularityParams::validate() const {
  if (!(B > 0.0) || !(L > 0.0) || !(eps > 0.0) || !std::isfinite(B) || !std::isfinite(L) || !std::isfinite(eps)) {
    throw Error("regularity parameters B, L, eps must be finite and strictly positive");
  }
}

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(RowMatrix x, Vec y) : x_(std::move(x)), y_(std::move(y)), dim_(static_cast<int>(x_.cols())) {
  if (x_.rows() != y_.size()) throw DimensionMismatch("dataset: row count differs from label count");
  if (!x_.rows()) return;
  if (dim_ < 1) throw Error("dataset: dimension must be positive");
  if (!all_finite(x_.data(), static_cast<std::size_t>(x_.size())) ||
      !all_finite(y_.data(), static_cast<std::size_t>(y_.size()))) {
    throw Error("dataset: covariates and labels must be finite");
  }
}

Dataset Dataset::from_samples(std::span<const Sample> samples, int dim) {
  if (dim < 1) throw Error("dataset: dimension must be positive");
  RowMatrix x(static_cast<Eigen::Index>(samples.size()), dim);
  Vec y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != dim) throw DimensionMismatch("dataset: sample dimension mismatch");
    x.row(static_cast<Eigen::Index>(i)) = samples[i].x.transpose();
    y[static_cast<Eigen::Index>(i)] = samples[i].y;
  }
  Dataset out(std::move(x), std::move(y));
  out.dim_ = dim;
  return out;
}

Sample Dataset::sample(std::size_t i) const {
  return {x_.row(static_cast<Eigen::Index>(i)).transpose(), y_[static_cast<Eigen::Index>(i)]};
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, size());
  begin = std::min(begin, end);
  auto n = static_cast<Eigen::Index>(end - begin);
  Dataset out(x_.middleRows(static_cast<Eigen::Index>(begin), n), y_.segment(static_cast<Eigen::Index>(begin), n));
  out.dim_ = dim_;
  return out;
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  RowMatrix x(static_cast<Eigen::Index>(rows.size()), dim_);
  Vec y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= size()) throw Error("dataset: row index out of range");
    x.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(rows[k]));
    y[static_cast<Eigen::Index>(k)] = y_[static_cast<Eigen::Index>(rows[k])];
  }
  Dataset out(std::move(x), std::move(y));
  out.dim_ = dim_;
  return out;
}

Dataset Dataset::with_labels(Vec y) const {
  if (y.size() != y_.size()) throw DimensionMismatch("dataset: label count mismatch");
  Dataset out(x_, std::move(y));
  out.dim_ = dim_;
  return out;
}

// -------------------------------------------------------- PiecewiseLinear

PiecewiseLinear::PiecewiseLinear(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.empty() || knots_.size() != values_.size()) {
    throw Error("piecewise-linear: need matching, nonempty knots and values");
  }
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i])) throw Error("piecewise-linear: non-finite knot");
    if (i > 0 && !(knots_[i] > knots_[i - 1])) throw Error("piecewise-linear: knots must be strictly increasing");
    if (i > 0 && values_[i] < values_[i - 1]) throw Error("piecewise-linear: values must be non-decreasing");
  }
}

double PiecewiseLinear::operator()(double z) const {
  if (z <= knots_.front()) return values_.front();
  if (z >= knots_.back()) return values_.back();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), z);
  auto i = static_cast<std::size_t>(it - knots_.begin());
  double t = (z - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
  return values_[i - 1] + t * (values_[i] - values_[i - 1]);
}

double PiecewiseLinear::derivative(double z) const {
  if (z < knots_.front() || z >= knots_.back()) return 0.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), z);
  auto i = static_cast<std::size_t>(it - knots_.begin());
  return (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]);
}

double PiecewiseLinear::max_slope() const {
  double s = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    s = std::max(s, (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]));
  }
  return s;
}

// ------------------------------------------------------------- Activation

Activation::Activation(ActivationKind kind, std::optional<double> clamp, std::optional<RegularityParams> regularity)
    : kind_(std::move(kind)), clamp_(clamp), regularity_(regularity) {
  if (clamp_ && !(*clamp_ > 0.0)) throw Error("activation: clamp bound must be positive");
  std::visit(overloaded{
                 [](const Linear& k) {
                   if (k.slope < 0) throw Error("activation: slope must be non-negative");
                 },
                 [](const GeneralRelu& k) {
                   if (k.slope < 0) throw Error("activation: slope must be non-negative");
                 },
                 [](const BiasedThreshold&) {},
                 [](const BoundedSmooth& k) {
                   if (k.amplitude < 0 || !(k.scale > 0)) throw Error("activation: smooth ramp needs amplitude >= 0, scale > 0");
                 },
                 [](const PiecewiseLinear&) {},
             },
             kind_);
}

Activation Activation::clamped(double bound) const { return Activation(kind_, bound, regularity_); }

double Activation::raw(double z) const {
  return std::visit(overloaded{
                        [z](const Linear& k) { return k.slope * z; },
                        [z](const GeneralRelu& k) { return k.slope * std::max(0.0, z + k.bias); },
                        [z](const BiasedThreshold& k) { return z + k.bias >= 0.0 ? 1.0 : 0.0; },
                        [z](const BoundedSmooth& k) { return k.amplitude * smooth_value(k.shape, (z - k.shift) / k.scale); },
                        [z](const PiecewiseLinear& k) { return k(z); },
                    },
                    kind_);
}

double Activation::raw_derivative(double z) const {
  return std::visit(overloaded{
                        [](const Linear& k) { return k.slope; },
                        [z](const GeneralRelu& k) { return z + k.bias >= 0.0 ? k.slope : 0.0; },
                        [](const BiasedThreshold&) { return 0.0; },
                        [z](const BoundedSmooth& k) {
                          return k.amplitude / k.scale * smooth_slope(k.shape, (z - k.shift) / k.scale);
                        },
                        [z](const PiecewiseLinear& k) { return k.derivative(z); },
                    },
                    kind_);
}

double Activation::operator()(double z) const {
  double v = raw(z);
  if (clamp_) v = std::clamp(v, -*clamp_, *clamp_);
  return v;
}

double Activation::derivative(double z) const {
  if (clamp_) {
    double v = raw(z);
    // Right derivative: once the raw value reaches +clamp it stays there.
    if (v >= *clamp_ || v < -*clamp_) return 0.0;
  }
  return raw_derivative(z);
}

std::vector<double> Activation::breakpoints() const {
  std::vector<double> pts = std::visit(overloaded{
                                           [](const Linear&) { return std::vector<double>{}; },
                                           [](const GeneralRelu& k) { return std::vector<double>{-k.bias}; },
                                           [](const BiasedThreshold& k) { return std::vector<double>{-k.bias}; },
                                           [](const BoundedSmooth&) { return std::vector<double>{}; },
                                           [](const PiecewiseLinear& k) { return k.knots(); },
                                       },
                                       kind_);
  if (clamp_) {
    auto f = [this](double z) { return raw(z); };
    for (double target : {-*clamp_, *clamp_}) {
      if (auto z = crossing(f, target)) pts.push_back(*z);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

std::vector<std::pair<double, double>> Activation::jumps() const {
  if (const auto* t = std::get_if<BiasedThreshold>(&kind_)) {
    double lo = 0.0, hi = 1.0;
    if (clamp_) {
      lo = std::clamp(lo, -*clamp_, *clamp_);
      hi = std::clamp(hi, -*clamp_, *clamp_);
    }
    return {{-t->bias, hi - lo}};
  }
  return {};
}

std::string Activation::name() const {
  std::string base = std::visit(overloaded{
                                    [](const Linear&) { return std::string("linear"); },
                                    [](const GeneralRelu&) { return std::string("relu"); },
                                    [](const BiasedThreshold&) { return std::string("threshold"); },
                                    [](const BoundedSmooth& k) { return shape_name(k.shape); },
                                    [](const PiecewiseLinear&) { return std::string("piecewise_linear"); },
                                },
                                kind_);
  return base;
}

// ------------------------------------------------------------- Hypothesis

Hypothesis::Hypothesis(Vec w, PiecewiseLinear u, double beta, double B)
    : w_(std::move(w)), u_(std::move(u)), beta_(beta), B_(B) {
  double n = w_.norm();
  if (w_.size() == 0 || !(n > 0.0) || std::abs(n - 1.0) > 1e-6) {
    throw Error("hypothesis: direction must be a unit vector");
  }
  w_ /= n;
}

double Hypothesis::project(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != w_.size()) throw DimensionMismatch("hypothesis: dimension mismatch");
  return dot(x, w_);
}

double Hypothesis::predict(std::span<const double> x) const { return u_(project(x)); }

// ------------------------------------------------------------- operations

double evaluate(const Activation& activation, double z) { return activation(z); }
double derivative(const Activation& activation, double z) { return activation.derivative(z); }

double truncate_label(double y, double B) {
  return std::abs(y) <= B ? y : std::copysign(B, y);
}

Dataset truncate_labels(const Dataset& data, double B) {
  if (!(B > 0.0)) throw Error("truncate_labels: B must be positive");
  Vec y = data.y();
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = truncate_label(y[i], B);
  return data.with_labels(std::move(y));
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 128;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double dot(std::span<const double> a, const Vec& b) {
  double s = 0.0;
  const double* pb = b.data();
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * pb[k];
  return s;
}

namespace {
template <class Predict>
double mean_squared_residual(const Dataset& data, Predict&& predict) {
  if (data.empty()) throw Error("squared_loss: empty dataset");
  std::vector<double> r(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    double e = predict(data.row(i)) - data.y()[static_cast<Eigen::Index>(i)];
    r[i] = e * e;
  }
  return pairwise_sum(r) / static_cast<double>(data.size());
}
}  // namespace

double squared_loss(const Dataset& data, const Hypothesis& hyp) {
  if (data.dim() != hyp.dim()) throw DimensionMismatch("squared_loss: dataset and hypothesis dimensions differ");
  return mean_squared_residual(data, [&](std::span<const double> x) { return hyp.predict(x); });
}

double squared_loss(const Dataset& data, const Vec& w, const Activation& sigma) {
  if (data.dim() != w.size()) throw DimensionMismatch("squared_loss: dataset and direction dimensions differ");
  return mean_squared_residual(data, [&](std::span<const double> x) { return sigma(dot(x, w)); });
}

// ------------------------------------------------------------------- JSON

void to_json(nlohmann::json& j, const RegularityParams& p) { j = {{"B", p.B}, {"L", p.L}, {"eps", p.eps}}; }

void from_json(const nlohmann::json& j, RegularityParams& p) {
  p.B = j.at("B").get<double>();
  p.L = j.at("L").get<double>();
  p.eps = j.at("eps").get<double>();
}

void to_json(nlohmann::json& j, const Activation& a) {
  j = std::visit(overloaded{
                     [](const Linear& k) { return nlohmann::json{{"kind", "linear"}, {"slope", k.slope}}; },
                     [](const GeneralRelu& k) {
                       return nlohmann::json{{"kind", "relu"}, {"bias", k.bias}, {"slope", k.slope}};
                     },
                     [](const BiasedThreshold& k) { return nlohmann::json{{"kind", "threshold"}, {"bias", k.bias}}; },
                     [](const BoundedSmooth& k) {
                       return nlohmann::json{{"kind", "smooth"},
                                             {"shape", shape_name(k.shape)},
                                             {"amplitude", k.amplitude},
                                             {"scale", k.scale},
                                             {"shift", k.shift}};
                     },
                     [](const PiecewiseLinear& k) {
                       return nlohmann::json{{"kind", "piecewise_linear"}, {"knots", k.knots()}, {"values", k.values()}};
                     },
                 },
                 a.kind());
  if (a.clamp()) j["clamp"] = *a.clamp();
  if (a.regularity()) j["regularity"] = *a.regularity();
}

void from_json(const nlohmann::json& j, Activation& a) {
  const auto kind = j.at("kind").get<std::string>();
  ActivationKind k;
  if (kind == "linear") {
    k = Linear{j.value("slope", 1.0)};
  } else if (kind == "relu") {
    k = GeneralRelu{j.value("bias", 0.0), j.value("slope", 1.0)};
  } else if (kind == "threshold") {
    k = BiasedThreshold{j.value("bias", 0.0)};
  } else if (kind == "smooth") {
    k = BoundedSmooth{parse_shape(j.value("shape", std::string("tanh"))), j.value("amplitude", 1.0),
                      j.value("scale", 1.0), j.value("shift", 0.0)};
  } else if (kind == "piecewise_linear") {
    k = PiecewiseLinear(j.at("knots").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
  } else {
    throw Error("unknown activation kind: " + kind);
  }
  std::optional<double> clamp;
  if (j.contains("clamp")) clamp = j.at("clamp").get<double>();
  std::optional<RegularityParams> reg;
  if (j.contains("regularity")) reg = j.at("regularity").get<RegularityParams>();
  a = Activation(std::move(k), clamp, reg);
}

void to_json(nlohmann::json& j, const Hypothesis& h) {
  j = {{"dim", h.dim()},
       {"w", std::vector<double>(h.w().data(), h.w().data() + h.w().size())},
       {"knots", h.u().knots()},
       {"values", h.u().values()},
       {"beta", h.beta()},
       {"B", h.B()}};
}

void from_json(const nlohmann::json& j, Hypothesis& h) {
  auto w = j.at("w").get<std::vector<double>>();
  int dim = j.at("dim").get<int>();
  if (static_cast<int>(w.size()) != dim) throw DimensionMismatch("hypothesis file: dim does not match w");
  h = Hypothesis(Eigen::Map<const Vec>(w.data(), dim),
                 PiecewiseLinear(j.at("knots").get<std::vector<double>>(), j.at("values").get<std::vector<double>>()),
                 j.at("beta").get<double>(), j.at("B").get<double>());
}

}  // namespace rsim
