#pragma once

// Quadrature oracle for expectations under the standard normal and for the
// Ornstein-Uhlenbeck smoothing operator
//   (T_rho g)(x) = E_z[ g(rho x + sqrt(1 - rho^2) z) ].
// Used by tests and probes; the learner itself never calls into this file.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rsim/model.hpp"

namespace rsim {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;
};

/// Gauss-Hermite rule normalized for E_{z~N(0,1)}: weights sum to 1 and
/// nodes are symmetric about 0. Rules are cached.
const QuadratureRule& gauss_hermite_rule(int order);
/// Gauss-Legendre rule on [-1, 1] (weights sum to 2). Cached.
const QuadratureRule& gauss_legendre_rule(int order);

/// A univariate integrand g = f + sum_k h_k delta(. - a_k).
/// `breaks` lists points where f is non-smooth (or changes rapidly); the
/// atoms model derivatives of jumps.
struct UnivariateFn {
  std::function<double(double)> f;
  std::vector<double> breaks;
  std::vector<std::pair<double, double>> atoms;  // (location, mass)

  double operator()(double z) const { return f(z); }
};

struct QuadOptions {
  int order = 64;
  int max_order = 256;
  double tol = 1e-9;
  double radius = 12.0;  // integration window for split quadrature
};

/// E_{z~N(0,1)}[g(z)], including atoms.
double gaussian_expectation(const UnivariateFn& g, const QuadOptions& opt = {});

/// (T_rho g)(x).
double ou_smooth(const UnivariateFn& g, double rho, double x, const QuadOptions& opt = {});

class SmoothedFunction {
 public:
  SmoothedFunction(UnivariateFn base, double rho, QuadOptions opt = {});

  double operator()(double x) const { return ou_smooth(base_, rho_, x, opt_); }
  double rho() const { return rho_; }
  const UnivariateFn& base() const { return base_; }
  /// T_rho g as an atom-free integrand. Its break hints sit at a / rho for
  /// every break or atom a of g, where it varies on the scale sqrt(1-rho^2).
  UnivariateFn as_function() const;

 private:
  UnivariateFn base_;
  double rho_;
  QuadOptions opt_;
};

/// ||g||_{L2(N)}. Atoms are rejected (infinite norm).
double l2_norm(const UnivariateFn& g, const QuadOptions& opt = {});
/// E[f g]
double l2_inner(const UnivariateFn& f, const UnivariateFn& g, const QuadOptions& opt = {});

UnivariateFn as_function(const Activation& sigma);
/// sigma' with point masses at the jumps of sigma.
UnivariateFn derivative_function(const Activation& sigma);

/// ||T_rho sigma'||_{L2}.
double smoothed_derivative_norm(const Activation& sigma, double rho, const QuadOptions& opt = {});

struct SemigroupReport {
  double composition_residual = 0.0;  // max |T_t T_s f - T_ts f| over the grid
  double norm_ratio = 0.0;            // max over rho in {t, s, ts} of ||T_rho f|| / ||f||
};
SemigroupReport check_semigroup_identities(const UnivariateFn& f, double t, double s, const QuadOptions& opt = {});

struct SmoothingErrorReport {
  double lhs = 0.0;  // E[(T_rho f - f)^2]
  double rhs = 0.0;  // 3 (1 - rho) E[f'^2]
};
SmoothingErrorReport check_smoothing_error(const UnivariateFn& f, const UnivariateFn& df, double rho,
                                           const QuadOptions& opt = {});

/// Angle in [0, pi] between nonzero vectors.
double angle(const Vec& u, const Vec& v);

struct CatalogEntry {
  std::string name;
  UnivariateFn f;
  UnivariateFn df;
  bool continuous = true;
};
/// Test functions: polynomials, ReLUs, clamped and smooth ramps, a threshold
/// and a piecewise-linear monotone link.
std::vector<CatalogEntry> function_catalog();

}  // namespace rsim
