#pragma once

// Band-conditioned spectral descent: band partition of the projection axis,
// per-band statistics, the empirical matrix M_w and its top eigenpair, and
// the random-sign walk over step directions.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rsim/model.hpp"
#include "rsim/rng.hpp"

namespace rsim {

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Uniform grid of width delta on [-m_prime, m_prime] with exact Gaussian
/// band probabilities.
struct BandPartition {
  double delta = 0.0;
  double m_prime = 0.0;
  std::size_t bands = 0;
  std::vector<double> probs;
  double tail = 0.0;  // Pr[|z| >= m_prime]

  double edge(std::size_t j) const;
  /// Band containing z, or nullopt outside [-m_prime, m_prime).
  std::optional<std::size_t> band_of(double z) const;
};

inline constexpr std::size_t kDefaultBandCap = 1'000'000;

BandPartition build_band_partition(const RegularityParams& params, std::size_t cap = kDefaultBandCap);

/// Per-band means g_j = (1/N) sum_i y_i x_i^{perp w} 1{w.x_i in E_j}, kept
/// only for nonempty bands.
struct BandStatistics {
  std::vector<std::size_t> band;  // band index of each stored column
  Mat g;                          // d x band.size()
  std::vector<std::size_t> counts;
  std::size_t n = 0;
};

/// Reusable dense accumulators, so repeated passes avoid reallocation.
struct BandWorkspace {
  void prepare(int dim, std::size_t bands);

  Mat sum_yx;  // d x bands
  std::vector<double> sum_yz;
  std::vector<std::size_t> count;
  std::vector<std::size_t> touched;
};

BandStatistics compute_band_statistics(const Dataset& data, const Vec& w, const BandPartition& partition,
                                       BandWorkspace* workspace = nullptr);

struct EigenPair {
  Vec vec;
  double val = 0.0;
  double second = 0.0;
  bool degenerate = false;
  int iterations = 0;
};

struct PowerOptions {
  double tol = 1e-10;
  int max_iter = 10'000;
};

/// Top eigenpair of a symmetric matrix restricted to w-perp, by power
/// iteration with re-projection; the second eigenvalue comes from one
/// deflated run on {w, v1}-perp.
EigenPair top_eigenpair(const Mat& m, const Vec& w, std::uint64_t seed, const PowerOptions& opt = {});

struct SpectralMatrix {
  Mat m;
  EigenPair top;
};

SpectralMatrix build_spectral_matrix(const BandStatistics& stats, const BandPartition& partition, const Vec& w,
                                     std::uint64_t seed);

/// w - eta v renormalized to the unit sphere.
Vec spectral_step(const Vec& w, const Vec& direction, double eta);

struct Schedule {
  double decay = 1.0 / 128.0;
  double step_fraction = 1.0 / 8.0;
  int T = 0;  // 0: derived from params
  int K = 0;  // 0: derived from T

  /// Fill T and K defaults: T = ceil(8 ln(max(L,2)/eps)), K = min(ceil(2^T ln 100), 4096).
  Schedule resolved(const RegularityParams& params) const;
  double phi(double theta_bar, int t) const;
  double eta(double theta_bar, int t) const;
};

struct TraceRecord {
  std::size_t restart = 0;
  int t = 0;
  Vec w;
  int sign = 0;  // 0 when the step was frozen on a degenerate matrix
  double eta = 0.0;
  double phi = 0.0;
  double eigval = 0.0;
  double gap = 0.0;
};

struct SignContext {
  std::size_t restart;
  int t;
  const Vec& w;
  const Vec& v;
  Rng& rng;
};
/// Returns +1 or -1; the step is w - eta * sign * v.
using SignChooser = std::function<int(const SignContext&)>;

SignChooser random_signs();
/// Picks the sign that moves w toward `truth`. For tests only.
SignChooser oracle_signs(Vec truth);

struct SpectralOptions {
  SignChooser chooser;                 // random_signs() when empty
  std::optional<std::size_t> max_nodes;  // cap on eigen computations
  bool record_trace = false;
};

struct SpectralResult {
  std::vector<Vec> iterates;  // distinct iterates in first-visit order, w0 first
  std::vector<TraceRecord> trace;
  std::size_t eigen_computations = 0;
  std::size_t degenerate_steps = 0;
  std::size_t restarts_completed = 0;
  bool budget_exhausted = false;
};

/// K restarts of T steps from w0. Walks share a trie keyed by their sign
/// prefix, so each distinct iterate costs one data pass.
SpectralResult spectral_optimization(const Dataset& data, double theta_bar, const Vec& w0,
                                     const RegularityParams& params, const Schedule& schedule, std::uint64_t seed,
                                     const SpectralOptions& opt = {});

}  // namespace rsim
