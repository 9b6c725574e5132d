#pragma once

// Starting directions from label thresholds: each threshold t turns the
// regression labels into a halfspace problem 1{y >= t}, whose normal is
// learned robustly.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rsim/model.hpp"

namespace rsim {

class UninformativeThreshold : public Error {
 public:
  using Error::Error;
};

struct ThresholdGrid {
  std::vector<double> thresholds;  // t_i = i sqrt(eps), i = 1 .. ceil(B / sqrt(eps)) + 1
};

ThresholdGrid build_threshold_grid(const RegularityParams& params);

struct HalfspaceInstance {
  Dataset data;  // labels in {0, 1}
  double positive_rate = 0.0;
};

HalfspaceInstance transform_labels(const Dataset& data, double t);

/// Robust learner for the normal vector of a biased halfspace.
class HalfspaceLearner {
 public:
  virtual ~HalfspaceLearner() = default;
  /// Unit normal estimate; throws UninformativeThreshold when the positive
  /// rate is 0 or 1.
  virtual Vec learn(const HalfspaceInstance& instance, double eps, std::uint64_t seed) const = 0;
};

/// Chow vector followed by subgradient refinement of a sigmoid surrogate.
class ChowRefineLearner : public HalfspaceLearner {
 public:
  struct Options {
    double temperature = 0.1;
    int passes = 200;
    double step = 0.1;  // step at pass p is step / sqrt(p)
    bool refine = true;
  };
  ChowRefineLearner() = default;
  explicit ChowRefineLearner(Options opt) : opt_(opt) {}
  Vec learn(const HalfspaceInstance& instance, double eps, std::uint64_t seed) const override;

  /// mean |y - s((w.x - b) / tau)| with b matched to the positive rate.
  double surrogate(const HalfspaceInstance& instance, const Vec& w) const;

 private:
  Options opt_;
};

Vec chow_direction(const HalfspaceInstance& instance);

Vec robust_halfspace_learn(const HalfspaceInstance& instance, double eps, std::uint64_t seed);

struct InitResult {
  std::vector<Vec> candidates;
  std::vector<double> thresholds_used;
  std::vector<std::string> warnings;
};

InitResult initialize(const Dataset& data, const RegularityParams& params, std::uint64_t seed,
                      const HalfspaceLearner& learner);
InitResult initialize(const Dataset& data, const RegularityParams& params, std::uint64_t seed);

}  // namespace rsim
