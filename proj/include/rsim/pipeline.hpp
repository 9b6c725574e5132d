#pragma once

// End-to-end learner: threshold initialization, spectral walks over a grid
// of angle scales, candidate pooling, and Lipschitz isotonic selection.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsim/isotonic.hpp"
#include "rsim/model.hpp"
#include "rsim/spectral.hpp"

namespace rsim {

struct PipelineConfig {
  RegularityParams params;
  std::vector<double> theta_grid;  // empty: default grid
  std::size_t theta_cap = 64;
  Schedule schedule;
  std::uint64_t seed = 0;
  bool fresh_split = true;
  bool paper_faithful = false;  // one sample for every stage, full grid, no pass budget
  bool trace = false;
  /// Total eigen computations (data passes) shared by all spectral runs.
  std::optional<std::size_t> pass_budget = 512;
  int repeats = 1;
  std::optional<double> beta;
  std::optional<Vec> truth;  // reporting only

  void validate() const;
};

/// {k eps / L : k = 1 .. ceil((pi/2) L / eps)} clamped to pi/2; when longer
/// than `cap`, a geometric subsample of k (dense near small angles).
std::vector<double> default_theta_grid(const RegularityParams& params, std::size_t cap, bool full);

/// Keeps the first of any group of vectors within `tol` radians.
std::vector<Vec> dedup_candidates(const std::vector<Vec>& vectors, double tol = 1e-9);

/// Indices 0..n-1 ordered coarse-to-fine: every 2^k-th entry before the
/// ones between them.
std::vector<std::size_t> coarse_to_fine_order(std::size_t n);

struct PipelineTrace {
  std::size_t pair = 0;
  double theta_bar = 0.0;
  TraceRecord record;
};

struct PipelineReport {
  std::size_t n_total = 0, n_init = 0, n_spectral = 0, n_fit = 0, n_holdout = 0;
  std::size_t bands = 0;
  std::vector<double> theta_grid;
  std::size_t init_candidates = 0;
  std::size_t spectral_iterates = 0;
  std::size_t pool_size = 0;
  std::size_t pairs_total = 0, pairs_run = 0;
  std::size_t eigen_computations = 0;
  std::size_t degenerate_steps = 0;
  bool budget_exhausted = false;
  std::vector<CandidateReport> candidates;
  std::size_t selected = 0;
  bool selected_constant = false;
  double holdout_loss = 0.0;
  double raw_label_loss = 0.0;  // holdout loss against the labels before truncation
  std::optional<double> angle_to_truth;
  std::vector<std::string> warnings;
  double seconds_init = 0.0, seconds_spectral = 0.0, seconds_select = 0.0, seconds_total = 0.0;
  double theoretical_sample_size = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  std::vector<PipelineTrace> trace;

  nlohmann::json summary() const;
  /// Summary line followed by one line per candidate.
  std::vector<nlohmann::json> lines() const;
};

struct PipelineResult {
  Hypothesis hypothesis;
  PipelineReport report;
};

PipelineResult run_pipeline(const Dataset& data, const PipelineConfig& config);

}  // namespace rsim
