#pragma once

// Domain types shared by every stage: samples, datasets, monotone
// activations, fitted hypotheses, and the loss / truncation primitives.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace rsim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

struct Sample {
  Vec x;
  double y = 0.0;
};

/// Target regularity of the activation class: sup bound B, derivative
/// L2 bound L, and accuracy eps.
struct RegularityParams {
  double B = 1.0;
  double L = 1.0;
  double eps = 0.1;

  void validate() const;
};

/// Immutable labelled sample set, stored row-major (one sample per row).
class Dataset {
 public:
  Dataset() = default;
  Dataset(RowMatrix x, Vec y);
  static Dataset from_samples(std::span<const Sample> samples, int dim);

  std::size_t size() const { return static_cast<std::size_t>(y_.size()); }
  bool empty() const { return size() == 0; }
  int dim() const { return dim_; }

  const RowMatrix& x() const { return x_; }
  const Vec& y() const { return y_; }
  std::span<const double> row(std::size_t i) const {
    return {x_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  Sample sample(std::size_t i) const;

  /// Rows [begin, end).
  Dataset slice(std::size_t begin, std::size_t end) const;
  /// Rows in the given order.
  Dataset select(std::span<const std::size_t> rows) const;
  /// Same covariates, new labels.
  Dataset with_labels(Vec y) const;

 private:
  RowMatrix x_;
  Vec y_;
  int dim_ = 0;
};

/// Monotone piecewise-linear function through (knots, values), extended as
/// a constant outside [knots.front(), knots.back()].
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  PiecewiseLinear(std::vector<double> knots, std::vector<double> values);
  static PiecewiseLinear constant(double c) { return PiecewiseLinear({0.0}, {c}); }

  double operator()(double z) const;
  double derivative(double z) const;  // right derivative; 0 on the flat ends
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  /// Largest slope between consecutive knots.
  double max_slope() const;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

struct Linear {
  double slope = 1.0;
};
/// slope * max(0, z + bias)
struct GeneralRelu {
  double bias = 0.0;
  double slope = 1.0;
};
/// 1{z + bias >= 0}
struct BiasedThreshold {
  double bias = 0.0;
};
enum class SmoothShape { Tanh, Logistic, Erf };
/// amplitude * shape((z - shift) / scale)
struct BoundedSmooth {
  SmoothShape shape = SmoothShape::Tanh;
  double amplitude = 1.0;
  double scale = 1.0;
  double shift = 0.0;
};

using ActivationKind = std::variant<Linear, GeneralRelu, BiasedThreshold, BoundedSmooth, PiecewiseLinear>;

/// A non-decreasing univariate link, optionally clamped to [-clamp, clamp].
class Activation {
 public:
  Activation() = default;
  explicit Activation(ActivationKind kind, std::optional<double> clamp = std::nullopt,
                      std::optional<RegularityParams> regularity = std::nullopt);

  static Activation identity() { return Activation(Linear{}); }
  static Activation relu(double bias = 0.0, double slope = 1.0) { return Activation(GeneralRelu{bias, slope}); }
  static Activation threshold(double bias = 0.0) { return Activation(BiasedThreshold{bias}); }

  Activation clamped(double bound) const;

  double operator()(double z) const;
  /// sigma'(z); right derivative at kinks. Jumps contribute nothing here,
  /// see jumps().
  double derivative(double z) const;

  /// Points where sigma is not smooth (kinks, knots, clamp entry points,
  /// jump locations), sorted.
  std::vector<double> breakpoints() const;
  /// Discontinuities as (location, jump height > 0).
  std::vector<std::pair<double, double>> jumps() const;

  const ActivationKind& kind() const { return kind_; }
  std::optional<double> clamp() const { return clamp_; }
  const std::optional<RegularityParams>& regularity() const { return regularity_; }
  std::string name() const;

 private:
  double raw(double z) const;
  double raw_derivative(double z) const;

  ActivationKind kind_ = Linear{};
  std::optional<double> clamp_;
  std::optional<RegularityParams> regularity_;
};

/// Learner output: unit direction w and monotone Lipschitz link u.
class Hypothesis {
 public:
  Hypothesis() = default;
  Hypothesis(Vec w, PiecewiseLinear u, double beta, double B);

  double predict(std::span<const double> x) const;
  double project(std::span<const double> x) const;

  const Vec& w() const { return w_; }
  const PiecewiseLinear& u() const { return u_; }
  double beta() const { return beta_; }
  double B() const { return B_; }
  int dim() const { return static_cast<int>(w_.size()); }

 private:
  Vec w_;
  PiecewiseLinear u_;
  double beta_ = 0.0;
  double B_ = 0.0;
};

double evaluate(const Activation& activation, double z);
double derivative(const Activation& activation, double z);

/// y -> sign(y) min(|y|, B)
double truncate_label(double y, double B);
Dataset truncate_labels(const Dataset& data, double B);

/// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

/// Mean of (u(w.x) - y)^2.
double squared_loss(const Dataset& data, const Hypothesis& hyp);
/// Mean of (sigma(w.x) - y)^2 for a ground-truth style pair.
double squared_loss(const Dataset& data, const Vec& w, const Activation& sigma);

double dot(std::span<const double> a, const Vec& b);

void to_json(nlohmann::json& j, const RegularityParams& p);
void from_json(const nlohmann::json& j, RegularityParams& p);
void to_json(nlohmann::json& j, const Activation& a);
void from_json(const nlohmann::json& j, Activation& a);
void to_json(nlohmann::json& j, const Hypothesis& h);
void from_json(const nlohmann::json& j, Hypothesis& h);

}  // namespace rsim
