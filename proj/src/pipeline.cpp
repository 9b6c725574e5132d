#include "rsim/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rsim/gauss.hpp"
#include "rsim/initializer.hpp"
#include "rsim/rng.hpp"

namespace rsim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void PipelineConfig::validate() const {
  params.validate();
  for (double t : theta_grid) {
    if (!(t > 0.0 && t <= std::numbers::pi / 2 + 1e-12)) throw Error("config: theta grid values must lie in (0, pi/2]");
  }
  if (theta_cap < 1) throw Error("config: theta cap must be positive");
  if (repeats < 1) throw Error("config: repeats must be at least 1");
  if (beta && !(*beta > 0.0)) throw Error("config: beta must be positive");
}

std::vector<double> default_theta_grid(const RegularityParams& params, std::size_t cap, bool full) {
  params.validate();
  const double unit = params.eps / params.L;
  const auto kmax = static_cast<std::size_t>(std::ceil(std::numbers::pi / 2 / unit - 1e-12));
  std::vector<std::size_t> ks;
  if (full || kmax <= cap) {
    ks.resize(kmax);
    std::iota(ks.begin(), ks.end(), 1);
  } else {
    const double ratio = std::log(static_cast<double>(kmax));
    for (std::size_t i = 0; i < cap; ++i) {
      double k = std::round(std::exp(ratio * static_cast<double>(i) / static_cast<double>(cap - 1)));
      ks.push_back(static_cast<std::size_t>(k));
    }
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  }
  std::vector<double> grid;
  for (std::size_t k : ks) grid.push_back(std::min(static_cast<double>(k) * unit, std::numbers::pi / 2));
  return grid;
}

std::vector<Vec> dedup_candidates(const std::vector<Vec>& vectors, double tol) {
  std::vector<Vec> out;
  for (const auto& v : vectors) {
    bool dup = false;
    for (const auto& u : out) {
      if (angle(u, v) <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> coarse_to_fine_order(std::size_t n) {
  std::vector<std::size_t> order;
  std::vector<char> seen(n, 0);
  std::size_t stride = 1;
  while (stride < n) stride *= 2;
  for (; stride >= 1; stride /= 2) {
    for (std::size_t i = 0; i < n; i += stride) {
      if (!seen[i]) {
        seen[i] = 1;
        order.push_back(i);
      }
    }
    if (stride == 1) break;
  }
  return order;
}

nlohmann::json PipelineReport::summary() const {
  nlohmann::json j = {
      {"type", "summary"},
      {"seed", seed},
      {"repeat", repeat},
      {"n_total", n_total},
      {"n_init", n_init},
      {"n_spectral", n_spectral},
      {"n_fit", n_fit},
      {"n_holdout", n_holdout},
      {"bands", bands},
      {"theta_grid", theta_grid},
      {"init_candidates", init_candidates},
      {"spectral_iterates", spectral_iterates},
      {"pool_size", pool_size},
      {"pairs_total", pairs_total},
      {"pairs_run", pairs_run},
      {"eigen_computations", eigen_computations},
      {"degenerate_steps", degenerate_steps},
      {"budget_exhausted", budget_exhausted},
      {"selected", selected},
      {"selected_constant", selected_constant},
      {"holdout_loss", holdout_loss},
      {"raw_label_loss", raw_label_loss},
      {"theoretical_sample_size", theoretical_sample_size},
      {"seconds", {{"init", seconds_init}, {"spectral", seconds_spectral}, {"select", seconds_select}, {"total", seconds_total}}},
      {"warnings", warnings},
  };
  if (angle_to_truth) j["angle_to_truth"] = *angle_to_truth;
  return j;
}

std::vector<nlohmann::json> PipelineReport::lines() const {
  std::vector<nlohmann::json> out{summary()};
  for (const auto& c : candidates) {
    nlohmann::json j = {{"type", "candidate"},
                        {"index", c.index},
                        {"constant", c.constant},
                        {"fit_objective", c.objective},
                        {"holdout_loss", c.holdout_loss}};
    if (c.angle_to_truth) j["angle_to_truth"] = *c.angle_to_truth;
    out.push_back(std::move(j));
  }
  return out;
}

namespace {

PipelineResult run_once(const Dataset& raw, const PipelineConfig& cfg, std::uint64_t seed) {
  const auto t_start = Clock::now();
  const RegularityParams& params = cfg.params;
  PipelineReport rep;
  rep.seed = seed;
  rep.n_total = raw.size();
  if (raw.size() < static_cast<std::size_t>(raw.dim()) + 1) throw Error("pipeline: need at least d + 1 samples");

  // Shuffle, then truncate labels (keeping the raw ones for reporting).
  std::vector<std::size_t> perm(raw.size());
  std::iota(perm.begin(), perm.end(), 0);
  {
    Rng rng = make_rng(seed, {tag("split")});
    std::shuffle(perm.begin(), perm.end(), rng);
  }
  const Dataset shuffled_raw = raw.select(perm);
  const Dataset data = truncate_labels(shuffled_raw, params.B);

  Dataset init_data, spec_data, fit_data, holdout_data, holdout_raw;
  if (cfg.paper_faithful) {
    init_data = spec_data = fit_data = holdout_data = data;
    holdout_raw = shuffled_raw;
  } else {
    const std::size_t n = data.size();
    const std::size_t half = n / 2;
    const Dataset learn = data.slice(0, half);
    const Dataset test = data.slice(half, n);
    if (cfg.fresh_split) {
      init_data = learn.slice(0, learn.size() / 2);
      spec_data = learn.slice(learn.size() / 2, learn.size());
    } else {
      init_data = spec_data = learn;
    }
    fit_data = test.slice(0, test.size() / 2);
    holdout_data = test.slice(test.size() / 2, test.size());
    holdout_raw = shuffled_raw.slice(half + test.size() / 2, n);
  }
  rep.n_init = init_data.size();
  rep.n_spectral = spec_data.size();
  rep.n_fit = fit_data.size();
  rep.n_holdout = holdout_data.size();

  const BandPartition partition = build_band_partition(params);
  rep.bands = partition.bands;
  const double d = raw.dim();
  if (static_cast<double>(spec_data.size()) < 100.0 * d * static_cast<double>(partition.bands)) {
    std::ostringstream msg;
    msg << "spectral sample size " << spec_data.size() << " is below 100 d I = "
        << 100.0 * d * static_cast<double>(partition.bands) << "; band statistics will be noisy";
    rep.warnings.push_back(msg.str());
  }
  {
    const double bl = params.B * params.L;
    rep.theoretical_sample_size = d * d * std::pow(params.B, 12) * std::pow(params.L, 8) / std::pow(params.eps, 10) *
                                  std::log(d * bl / (0.01 * params.eps));
  }

  // Initialization.
  auto t0 = Clock::now();
  InitResult init = initialize(init_data, params, derive_seed(seed, {tag("init")}));
  rep.seconds_init = seconds_since(t0);
  rep.init_candidates = init.candidates.size();
  for (auto& w : init.warnings) rep.warnings.push_back(w);

  // Spectral walks over (w0, theta_bar) pairs.
  t0 = Clock::now();
  rep.theta_grid = cfg.theta_grid.empty() ? default_theta_grid(params, cfg.theta_cap, cfg.paper_faithful) : cfg.theta_grid;
  const Schedule sch = cfg.schedule.resolved(params);
  std::vector<Vec> pool = init.candidates;
  const std::size_t n_theta = rep.theta_grid.size();
  const std::size_t n_init = init.candidates.size();
  rep.pairs_total = n_theta * n_init;
  const std::optional<std::size_t> budget = cfg.paper_faithful ? std::nullopt : cfg.pass_budget;
  std::optional<std::size_t> per_pair;
  if (budget && rep.pairs_total) {
    per_pair = std::max<std::size_t>(static_cast<std::size_t>(sch.T), *budget / rep.pairs_total);
  }
  std::size_t pair_index = 0;
  for (std::size_t ti : coarse_to_fine_order(n_theta)) {
    for (std::size_t wi = 0; wi < n_init; ++wi, ++pair_index) {
      if (budget && rep.eigen_computations >= *budget) {
        rep.budget_exhausted = true;
        break;
      }
      SpectralOptions opt;
      opt.record_trace = cfg.trace;
      if (per_pair) opt.max_nodes = std::min(*per_pair, *budget - rep.eigen_computations);
      const double theta_bar = rep.theta_grid[ti];
      try {
        SpectralResult sr = spectral_optimization(spec_data, theta_bar, init.candidates[wi], params, sch,
                                                  derive_seed(seed, {tag("spectral"), ti, wi}), opt);
        rep.eigen_computations += sr.eigen_computations;
        rep.degenerate_steps += sr.degenerate_steps;
        rep.spectral_iterates += sr.iterates.size();
        // The first iterate is w0 itself, already in the pool.
        pool.insert(pool.end(), sr.iterates.begin() + 1, sr.iterates.end());
        for (auto& r : sr.trace) rep.trace.push_back({pair_index, theta_bar, std::move(r)});
      } catch (const ConvergenceError& e) {
        rep.warnings.push_back(std::string("spectral run skipped: ") + e.what());
      }
      ++rep.pairs_run;
    }
    if (rep.budget_exhausted) break;
  }
  rep.seconds_spectral = seconds_since(t0);

  // Testing.
  t0 = Clock::now();
  pool = dedup_candidates(pool);
  rep.pool_size = pool.size() + 1;
  SelectOptions so;
  so.beta = cfg.beta;
  so.truth = cfg.truth;
  Selection sel = test_and_select(pool, fit_data, holdout_data, params, so);
  rep.seconds_select = seconds_since(t0);
  if (sel.clamp_warnings) {
    rep.warnings.push_back(std::to_string(sel.clamp_warnings) + " candidate fits exceeded [-B, B] and were clamped");
  }
  rep.candidates = std::move(sel.candidates);
  rep.selected = sel.index;
  rep.selected_constant = sel.index == pool.size();
  rep.holdout_loss = rep.candidates[sel.index].holdout_loss;
  rep.raw_label_loss = squared_loss(holdout_raw, sel.hypothesis);
  if (cfg.truth && !rep.selected_constant) rep.angle_to_truth = angle(sel.hypothesis.w(), *cfg.truth);
  rep.seconds_total = seconds_since(t_start);
  return {std::move(sel.hypothesis), std::move(rep)};
}

}  // namespace

PipelineResult run_pipeline(const Dataset& data, const PipelineConfig& config) {
  config.validate();
  if (data.empty()) throw Error("pipeline: empty dataset");
  if (config.truth && config.truth->size() != data.dim()) throw DimensionMismatch("pipeline: truth dimension mismatch");
  std::optional<PipelineResult> best;
  for (int r = 0; r < config.repeats; ++r) {
    const std::uint64_t seed = r == 0 ? config.seed : derive_seed(config.seed, {tag("repeat"), static_cast<std::uint64_t>(r)});
    PipelineResult res = run_once(data, config, seed);
    res.report.repeat = r;
    if (!best || res.report.holdout_loss < best->report.holdout_loss) best = std::move(res);
  }
  return std::move(*best);
}

}  // namespace rsim
