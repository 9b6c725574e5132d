#include "rsim/initializer.hpp"

#include <cmath>
#include <sstream>

#include "rsim/normal.hpp"
#include "rsim/rng.hpp"

namespace rsim {

ThresholdGrid build_threshold_grid(const RegularityParams& params) {
  params.validate();
  const double step = std::sqrt(params.eps);
  const auto count = static_cast<int>(std::ceil(params.B / step - 1e-12)) + 1;
  ThresholdGrid g;
  g.thresholds.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) g.thresholds.push_back(i * step);
  return g;
}

HalfspaceInstance transform_labels(const Dataset& data, double t) {
  Vec y(static_cast<Eigen::Index>(data.size()));
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y[i] = data.y()[i] >= t ? 1.0 : 0.0;
    pos += y[i] > 0.0;
  }
  HalfspaceInstance inst{data.with_labels(std::move(y)), 0.0};
  inst.positive_rate = data.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(data.size());
  return inst;
}

namespace {

void require_informative(const HalfspaceInstance& inst) {
  if (inst.data.empty()) throw Error("halfspace learner: empty instance");
  if (inst.positive_rate <= 0.0 || inst.positive_rate >= 1.0) {
    throw UninformativeThreshold("halfspace learner: labels are constant, threshold carries no direction");
  }
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

}  // namespace

Vec chow_direction(const HalfspaceInstance& inst) {
  require_informative(inst);
  // Centering the labels leaves the population vector unchanged and cuts
  // the sampling noise.
  Vec y = inst.data.y().array() - inst.positive_rate;
  Vec c = inst.data.x().transpose() * y;
  double n = c.norm();
  if (!(n > 0.0)) throw UninformativeThreshold("halfspace learner: Chow vector vanishes");
  return c / n;
}

double ChowRefineLearner::surrogate(const HalfspaceInstance& inst, const Vec& w) const {
  const double b = normal_quantile(1.0 - inst.positive_rate);
  Vec u = ((inst.data.x() * w).array() - b) / opt_.temperature;
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) s += std::abs(inst.data.y()[i] - logistic(u[i]));
  return s / static_cast<double>(u.size());
}

Vec ChowRefineLearner::learn(const HalfspaceInstance& inst, double /*eps*/, std::uint64_t /*seed*/) const {
  Vec w = chow_direction(inst);
  if (!opt_.refine) return w;
  const double b = normal_quantile(1.0 - inst.positive_rate);
  const double tau = opt_.temperature;
  const auto n = static_cast<double>(inst.data.size());
  Vec best = w;
  double best_val = surrogate(inst, w);
  for (int pass = 1; pass <= opt_.passes; ++pass) {
    Vec u = ((inst.data.x() * w).array() - b) / tau;
    Vec coef(u.size());
    double val = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      double s = logistic(u[i]);
      double yi = inst.data.y()[i];
      val += std::abs(yi - s);
      // d/du |y - s(u)| for y in {0, 1}
      coef[i] = (yi > 0.5 ? -1.0 : 1.0) * s * (1.0 - s) / tau;
    }
    val /= n;
    if (val < best_val) {
      best_val = val;
      best = w;
    }
    Vec grad = inst.data.x().transpose() * coef / n;
    grad -= w.dot(grad) * w;  // tangent to the sphere
    Vec next = w - (opt_.step / std::sqrt(static_cast<double>(pass))) * grad;
    w = next / next.norm();
  }
  double last = surrogate(inst, w);
  if (last < best_val) best = w;
  return best;
}

Vec robust_halfspace_learn(const HalfspaceInstance& instance, double eps, std::uint64_t seed) {
  return ChowRefineLearner().learn(instance, eps, seed);
}

InitResult initialize(const Dataset& data, const RegularityParams& params, std::uint64_t seed,
                      const HalfspaceLearner& learner) {
  if (data.empty()) throw Error("initialize: empty dataset");
  InitResult res;
  const ThresholdGrid grid = build_threshold_grid(params);
  for (std::size_t i = 0; i < grid.thresholds.size(); ++i) {
    const double t = grid.thresholds[i];
    HalfspaceInstance inst = transform_labels(data, t);
    try {
      Vec w = learner.learn(inst, params.eps, derive_seed(seed, {tag("threshold"), i}));
      res.candidates.push_back(w / w.norm());
      res.thresholds_used.push_back(t);
    } catch (const UninformativeThreshold&) {
    }
  }
  if (res.candidates.empty()) {
    std::ostringstream msg;
    msg << "initialize: all " << grid.thresholds.size() << " thresholds were uninformative";
    res.warnings.push_back(msg.str());
  }
  return res;
}

InitResult initialize(const Dataset& data, const RegularityParams& params, std::uint64_t seed) {
  return initialize(data, params, seed, ChowRefineLearner());
}

}  // namespace rsim
