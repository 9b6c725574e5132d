#pragma once

// Lipschitz isotonic regression along a direction:
//   minimize sum_i (v_i - y_i)^2  s.t.  0 <= v_{i+1} - v_i <= beta (z_{i+1} - z_i)
// plus hypothesis construction and candidate selection.

#include <limits>
#include <optional>
#include <vector>

#include "rsim/model.hpp"

namespace rsim {

struct IsoInstance {
  std::vector<double> z;  // non-decreasing
  std::vector<double> y;
  double beta = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct IsoSolution {
  std::vector<double> v;
  double objective = 0.0;
};

/// Exact solver. Dynamic programming over the derivative of the value
/// function, kept as a piecewise-linear map in two breakpoint stacks.
IsoSolution solve_iso(const IsoInstance& instance);

/// Primal active-set QP on the dense KKT system. Reference solver for small
/// instances (n <= 500).
IsoSolution solve_iso_dense(const IsoInstance& instance);

/// Plain (unconstrained-slope) isotonic regression with unit weights.
std::vector<double> pava(const std::vector<double>& y);

/// Largest violation of the chain constraints.
double iso_violation(const IsoInstance& instance, const std::vector<double>& v);
double iso_objective(const IsoInstance& instance, const std::vector<double>& v);

struct Interpolant {
  PiecewiseLinear u;
  bool clamped = false;  // some fitted value exceeded [-B, B]
};
Interpolant interpolate(const IsoInstance& instance, const IsoSolution& sol, double B);
Hypothesis interpolate_hypothesis(const IsoInstance& instance, const IsoSolution& sol, const Vec& w, double B);

/// Default Lipschitz bound B L / sqrt(eps).
double default_beta(const RegularityParams& params);

struct CandidateFit {
  Hypothesis hypothesis;
  double objective = 0.0;  // mean squared residual of the fit on its own data
  bool clamped = false;
};
/// Sort the projections of `data` onto w, solve, interpolate.
CandidateFit fit_candidate(const Dataset& data, const Vec& w, double beta, double B);
/// Best constant predictor (the clamped label mean).
CandidateFit fit_constant(const Dataset& data, double B);

struct CandidateReport {
  std::size_t index = 0;
  bool constant = false;
  double objective = 0.0;
  double holdout_loss = 0.0;
  std::optional<double> angle_to_truth;
};

struct Selection {
  Hypothesis hypothesis;
  std::size_t index = 0;
  std::vector<CandidateReport> candidates;
  std::size_t clamp_warnings = 0;
};

struct SelectOptions {
  std::optional<double> beta;     // default_beta(params) when unset
  bool add_constant = true;       // append the constant-fit sentinel
  std::optional<Vec> truth;       // for angle reporting only
};

/// Fit every candidate on `fit`, pick the smallest squared loss on `holdout`
/// (earliest index on ties).
Selection test_and_select(const std::vector<Vec>& candidates, const Dataset& fit, const Dataset& holdout,
                          const RegularityParams& params, const SelectOptions& opt = {});

}  // namespace rsim
