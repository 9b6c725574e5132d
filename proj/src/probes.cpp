#include "rsim/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rsim/gauss.hpp"
#include "rsim/isotonic.hpp"
#include "rsim/rng.hpp"
#include "rsim/synth.hpp"

namespace rsim {

nlohmann::json ProbeCheck::to_json() const {
  return {{"suite", suite}, {"check", name}, {"value", value}, {"bound", bound}, {"pass", pass}};
}

namespace {

ProbeCheck at_most(const std::string& suite, const std::string& name, double value, double bound) {
  return {suite, name, value, bound, value <= bound};
}

ProbeCheck at_least(const std::string& suite, const std::string& name, double value, double bound) {
  return {suite, name, value, bound, value >= bound};
}

}  // namespace

std::vector<ProbeCheck> semigroup_suite() {
  const std::string s = "semigroup";
  std::vector<ProbeCheck> out;
  const auto catalog = function_catalog();
  for (const auto& e : catalog) {
    if (e.name.rfind("z^", 0) == 0 || e.name == "constant") {
      auto r = check_semigroup_identities(e.f, 0.6, 0.5);
      out.push_back(at_most(s, "composition/" + e.name, r.composition_residual, 1e-8));
    }
  }
  for (const auto& e : catalog) {
    double base = l2_norm(e.f);
    double prev = 0.0, worst_ratio = 0.0, worst_drop = 0.0;
    for (int k = 1; k <= 9; ++k) {
      double rho = 0.1 * k;
      double n = l2_norm(SmoothedFunction(e.f, rho).as_function());
      if (base > 0.0) worst_ratio = std::max(worst_ratio, n / base - 1.0);
      if (k > 1) worst_drop = std::max(worst_drop, (prev - n) / std::max(1.0, prev));
      prev = n;
    }
    out.push_back(at_most(s, "nonexpansive/" + e.name, worst_ratio, 1e-6));
    out.push_back(at_most(s, "rho_monotone/" + e.name, worst_drop, 1e-6));
  }
  for (const auto& e : catalog) {
    if (!e.continuous) continue;
    for (double rho : {0.5, 0.9, 0.99}) {
      auto r = check_smoothing_error(e.f, e.df, rho);
      out.push_back(at_most(s, "smoothing_error/" + e.name + "@" + std::to_string(rho).substr(0, 4), r.lhs - r.rhs, 0.0));
    }
  }
  return out;
}

std::vector<ProbeCheck> isotonic_suite(std::uint64_t seed) {
  const std::string s = "isotonic";
  Rng rng = make_rng(seed, {tag("iso-suite")});
  std::uniform_int_distribution<int> size(1, 40);
  std::normal_distribution<double> normal;
  double worst_gap = 0.0, worst_feas = 0.0, worst_pava = 0.0;
  const double betas[] = {0.1, 1.0, 10.0};
  for (int k = 0; k < 300; ++k) {
    IsoInstance inst;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      inst.z.push_back(normal(rng));
      inst.y.push_back(normal(rng) + 0.5 * inst.z.back());
    }
    std::sort(inst.z.begin(), inst.z.end());
    if (k < 200) {
      inst.beta = betas[k % 3];
      auto fast = solve_iso(inst);
      auto dense = solve_iso_dense(inst);
      worst_gap = std::max(worst_gap, std::abs(fast.objective - dense.objective));
      worst_feas = std::max(worst_feas, iso_violation(inst, fast.v));
    } else {
      auto fast = solve_iso(inst);
      auto plain = pava(inst.y);
      for (int i = 0; i < n; ++i) worst_pava = std::max(worst_pava, std::abs(fast.v[i] - plain[i]));
    }
  }
  return {at_most(s, "dense_qp_objective_gap", worst_gap, 1e-6), at_most(s, "feasibility", worst_feas, 1e-9),
          at_most(s, "unbounded_slope_matches_pava", worst_pava, 1e-9)};
}

std::vector<ProbeCheck> spectral_suite(std::size_t mc_budget, std::uint64_t seed) {
  const std::string s = "spectral";
  const int d = 5;
  const double theta = std::numbers::pi / 6;
  Rng rng = make_rng(seed, {tag("spectral-suite")});
  GroundTruth truth;
  truth.w_star = random_unit_vector(d, rng);
  truth.sigma = Activation::relu(0.0, 16.0).clamped(100.0);
  truth.noise = ObliviousBounded{0.01, 1.0};
  truth.B = 100.0;
  const Vec w = rotate_towards_random(truth.w_star, theta, derive_seed(seed, {tag("w")}));
  ProbeOptions opt;
  opt.mc_budget = mc_budget;
  const ProbeRecord rec = population_probe(truth, w, opt, seed);

  const double signal = std::pow(std::sin(rec.theta) * rec.smoothed_norm, 2);
  std::vector<ProbeCheck> out;
  out.push_back(at_least(s, "alignment_condition", std::sin(rec.theta) * rec.smoothed_norm, 40.0 * std::sqrt(rec.opt)));
  out.push_back(at_least(s, "alignment_lower_bound", rec.alignment.value + 5.0 * rec.alignment.se, signal / 16.0));
  double worst = -INFINITY;
  for (const auto& e : rec.orthogonal) worst = std::max(worst, e.value - 5.0 * e.se);
  out.push_back(at_most(s, "orthogonal_upper_bound", worst, 2.0 * rec.opt));
  out.push_back(at_least(s, "top_eigenvector_correlation", rec.top_correlation, std::sqrt(3.0) / 2.0 - 0.05));
  double gap_se = rec.alignment.se;
  for (const auto& e : rec.orthogonal) gap_se = std::max(gap_se, e.se);
  out.push_back(at_least(s, "eigengap", rec.eigengap + 5.0 * gap_se, signal / 24.0));
  out.push_back(at_least(s, "gradient_correlation",
                         rec.gradient_correlation.value + 5.0 * rec.gradient_correlation.se, 2.0 / 3.0 * signal));
  return out;
}

}  // namespace rsim
