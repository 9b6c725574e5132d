#pragma once

// Synthetic Gaussian single-index data with label corruption, ground-truth
// loss references, and Monte-Carlo probes of the spectral matrix.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "rsim/model.hpp"
#include "rsim/spectral.hpp"

namespace rsim {

struct NoNoise {};
/// Independently with probability `rate`, add +-magnitude (random sign).
struct ObliviousBounded {
  double rate = 0.0;
  double magnitude = 0.0;
};
/// Exactly floor(rate n) samples get label +-B against the trend: +B when
/// the projection lies below the band centre, -B above. Samples inside the
/// projection band [lo, hi] are used first, the nearest outside ones after.
struct AdversarialBand {
  double rate = 0.0;
  double lo = -0.5;
  double hi = 0.5;
  std::optional<Vec> direction;  // w* when unset
};
/// Flip the sign of the floor(rate n) labels with the largest |w*.x|.
struct SignFlipTail {
  double rate = 0.0;
};

using NoiseModel = std::variant<NoNoise, ObliviousBounded, AdversarialBand, SignFlipTail>;

struct GroundTruth {
  Vec w_star;
  Activation sigma;
  NoiseModel noise = NoNoise{};
  double B = 1.0;  // labels are truncated to [-B, B]

  void validate() const;
};

struct GeneratedData {
  Dataset data;
  std::size_t corrupted = 0;
};

/// x ~ N(0, I_d) in blocks of `kGenerateBlock` rows with per-block streams.
inline constexpr std::size_t kGenerateBlock = 4096;
GeneratedData generate_with_info(const GroundTruth& truth, std::size_t n, int d, std::uint64_t seed);
Dataset generate(const GroundTruth& truth, std::size_t n, int d, std::uint64_t seed);

/// Standard-normal covariates only.
RowMatrix gaussian_covariates(std::size_t n, int d, std::uint64_t seed);

/// Empirical E[(y - sigma(w*.x))^2]: an upper bound on OPT.
double estimate_opt(const GroundTruth& truth, const Dataset& data);

/// Unit vector at angle theta from w, in the plane spanned by w and a
/// random orthogonal direction.
Vec rotate_towards_random(const Vec& w, double theta, std::uint64_t seed);

struct HalfspaceSample {
  Dataset data;  // labels in {0, 1}
  Vec w_star;
  std::size_t flipped = 0;
};
/// Labels 1{w*.x >= M}; the floor(rate n) samples closest to the decision
/// boundary get their labels flipped.
HalfspaceSample generate_halfspace(std::size_t n, int d, double M, double flip_rate, std::uint64_t seed);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct ProbeOptions {
  std::size_t mc_budget = 1'000'000;
  RegularityParams partition{1.0, 1.0, 0.1};
  int orthogonal_directions = 20;
};

struct ProbeRecord {
  double theta = 0.0;
  double smoothed_norm = 0.0;  // ||T_{cos theta} sigma'||
  double opt = 0.0;            // empirical loss of the truth on the probe sample
  Estimate alignment;          // v*' M v*
  std::vector<Estimate> orthogonal;  // u' M u, u orthogonal to w and v*
  double top_correlation = 0.0;      // |top eigenvector . v*|
  double top_eigval = 0.0;
  double eigengap = 0.0;
  Estimate gradient_correlation;  // E[y T sigma'(w.x) x^{perp w}] . w*
};

/// Bias-corrected Monte-Carlo estimates of the population matrix M_w on
/// fresh samples. Band second moments use U-statistics, so the estimates
/// carry no O(I/N) bias.
ProbeRecord population_probe(const GroundTruth& truth, const Vec& w, const ProbeOptions& opt, std::uint64_t seed);

/// Plain and bias-corrected empirical matrices on a given sample.
Mat empirical_matrix(const Dataset& data, const Vec& w, const BandPartition& partition);
Mat debiased_matrix(const Dataset& data, const Vec& w, const BandPartition& partition);

}  // namespace rsim
