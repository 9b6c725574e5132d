#pragma once

// Invariant suites behind `probe-invariants`: semigroup identities,
// isotonic solver agreement, and bounds on the spectral matrix.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rsim {

struct ProbeCheck {
  std::string suite;
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;

  nlohmann::json to_json() const;
};

std::vector<ProbeCheck> semigroup_suite();
std::vector<ProbeCheck> isotonic_suite(std::uint64_t seed);
/// Monte-Carlo checks on a slope-16 ReLU at 30 degrees, d = 5, oblivious
/// noise with OPT about 0.01.
std::vector<ProbeCheck> spectral_suite(std::size_t mc_budget, std::uint64_t seed);

}  // namespace rsim
