// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "rsim/gauss.hpp"
#include "rsim/initializer.hpp"
#include "rsim/pipeline.hpp"
#include "rsim/probes.hpp"
#include "rsim/spectral.hpp"
#include "rsim/synth.hpp"

using namespace rsim;

namespace {

constexpr int kSeeds = 10;

// 1. noiseless recovery
constexpr int kRecD = 10;
constexpr std::size_t kRecN = 200'000;
constexpr double kRecClamp = 3.0;
constexpr double kRecEps = 0.05;
constexpr double kRecLoss = 0.01;
constexpr double kRecSin = 0.05;
constexpr int kRecNeed = 8;
constexpr double kRecSeconds = 120.0;

// 2. constant-factor robustness
constexpr int kRobD = 10;
constexpr std::size_t kRobN = 500'000;
constexpr double kRobBias = 0.5;
constexpr double kRobB = 4.0;
constexpr double kRobEps = 0.02;
constexpr double kRobFactor = 16.0;
constexpr std::size_t kRobBudget = 128;
constexpr std::size_t kRobTestN = 200'000;

// 3. spectral-matrix probes
constexpr std::size_t kProbeMc = 1'000'000;
constexpr double kProbeSeconds = 300.0;

// 6. angle contraction with oracle signs
constexpr int kConD = 10;
constexpr std::size_t kConN = 100'000;
constexpr double kConThetaBar = 0.5;
constexpr double kConSlack = 0.01;
constexpr double kConEps = 0.1;
constexpr int kConNeed = 9;

// 7. Wedin / concentration
constexpr int kWedD = 10;
constexpr std::size_t kWedN = 200'000;
constexpr double kWedEps = 0.2;
constexpr double kWedTheta = std::numbers::pi / 3;
constexpr double kWedSlack = 1e-6;
constexpr double kWedRatioLo = 1.2;
constexpr double kWedRatioHi = 2.5;

// 8. initializer contract
constexpr int kInitD = 10;
constexpr std::size_t kInitN = 100'000;
constexpr double kInitFlip = 0.05;
constexpr int kInitNeed = 8;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s criterion %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec truth_direction(int d, std::uint64_t seed) {
  Rng rng = make_rng(seed, {tag("acceptance-w")});
  return random_unit_vector(d, rng);
}

void noiseless_recovery() {
  int ok = 0;
  double worst_time = 0.0, worst_loss = 0.0, worst_sin = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    GroundTruth t;
    t.w_star = truth_direction(kRecD, s);
    t.sigma = Activation::identity().clamped(kRecClamp);
    t.B = kRecClamp;
    Dataset data = generate(t, kRecN, kRecD, derive_seed(s, {tag("rec")}));
    PipelineConfig cfg;
    cfg.params = {kRecClamp, 1.0, kRecEps};
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.truth = t.w_star;
    PipelineResult r = run_pipeline(data, cfg);
    const double secs = seconds(t0);
    const double sn = std::sin(angle(r.hypothesis.w(), t.w_star));
    const double loss = r.report.holdout_loss;
    worst_time = std::max(worst_time, secs);
    worst_loss = std::max(worst_loss, loss);
    worst_sin = std::max(worst_sin, sn);
    if (loss <= kRecLoss && sn <= kRecSin && secs <= kRecSeconds) ++ok;
  }
  report(1, "noiseless-recovery", ok >= kRecNeed,
         fmt("%d/%d seeds with loss<=%.3g and sin<=%.3g (worst loss %.3g, worst sin %.3g, worst time %.1fs)", ok,
             kSeeds, kRecLoss, kRecSin, worst_loss, worst_sin, worst_time));
}

void robustness() {
  for (double opt_target : {0.01, 0.05}) {
    std::vector<double> losses, opts;
    for (int s = 0; s < kSeeds; ++s) {
      GroundTruth t;
      t.w_star = truth_direction(kRobD, 100 + s);
      t.sigma = Activation::relu(kRobBias, 1.0);
      t.noise = ObliviousBounded{opt_target, 1.0};
      t.B = kRobB;
      Dataset data = generate(t, kRobN, kRobD, derive_seed(s, {tag("rob"), 0}));
      Dataset test = generate(t, kRobTestN, kRobD, derive_seed(s, {tag("rob"), 1}));
      PipelineConfig cfg;
      cfg.params = {kRobB, 1.0, kRobEps};
      cfg.seed = static_cast<std::uint64_t>(s);
      cfg.pass_budget = kRobBudget;
      PipelineResult r = run_pipeline(data, cfg);
      losses.push_back(squared_loss(test, r.hypothesis));
      opts.push_back(estimate_opt(t, test));
    }
    const double opt = median(opts), loss = median(losses);
    const double bound = kRobFactor * opt + kRobEps;
    report(2, fmt("robustness-opt-%.2f", opt_target), loss <= bound,
           fmt("median loss %.4g <= %.4g (OPT %.4g, empirical ratio %.2f)", loss, bound, opt, loss / opt));
  }
}

void spectral_probes() {
  const auto t0 = std::chrono::steady_clock::now();
  auto checks = spectral_suite(kProbeMc, 3);
  const double secs = seconds(t0);
  bool all = true;
  std::string detail;
  for (const auto& c : checks) {
    all = all && c.pass;
    detail += fmt("%s %.4g vs %.4g%s; ", c.name.c_str(), c.value, c.bound, c.pass ? "" : " (violated)");
  }
  detail += fmt("%.1fs", secs);
  report(3, "spectral-probes", all && secs <= kProbeSeconds, detail);
}

void isotonic_equivalence() {
  auto checks = isotonic_suite(4);
  bool all = true;
  std::string detail;
  for (const auto& c : checks) {
    all = all && c.pass;
    detail += fmt("%s %.3g <= %.3g; ", c.name.c_str(), c.value, c.bound);
  }
  report(4, "isotonic-oracle", all, detail);
}

void semigroup() {
  auto checks = semigroup_suite();
  int bad = 0;
  double worst_comp = 0.0, worst_ne = 0.0, worst_mono = 0.0, worst_smooth = -INFINITY;
  std::string failed;
  for (const auto& c : checks) {
    if (!c.pass) {
      ++bad;
      failed += " " + c.name;
    }
    if (c.name.rfind("composition", 0) == 0) worst_comp = std::max(worst_comp, c.value);
    if (c.name.rfind("nonexpansive", 0) == 0) worst_ne = std::max(worst_ne, c.value);
    if (c.name.rfind("rho_monotone", 0) == 0) worst_mono = std::max(worst_mono, c.value);
    if (c.name.rfind("smoothing_error", 0) == 0) worst_smooth = std::max(worst_smooth, c.value);
  }
  report(5, "semigroup", bad == 0,
         fmt("%zu checks, composition %.2g, norm excess %.2g, monotonicity %.2g, max(lhs-rhs) %.3g%s", checks.size(),
             worst_comp, worst_ne, worst_mono, worst_smooth, failed.c_str()));
}

void contraction() {
  int ok = 0;
  double worst = -INFINITY;
  for (int s = 0; s < kSeeds; ++s) {
    GroundTruth t;
    t.w_star = truth_direction(kConD, 300 + s);
    t.sigma = Activation::relu();
    t.B = 100.0;
    Dataset data = generate(t, kConN, kConD, derive_seed(s, {tag("con")}));
    const double opt = estimate_opt(t, data);
    Vec w0 = rotate_towards_random(t.w_star, kConThetaBar, derive_seed(s, {tag("con-w0")}));
    Schedule sch;
    sch.K = 1;
    SpectralOptions so;
    so.chooser = oracle_signs(t.w_star);
    so.record_trace = true;
    const RegularityParams params{1.0, 1.0, kConEps};
    SpectralResult r = spectral_optimization(data, kConThetaBar, w0, params, sch, s, so);
    const Schedule res = sch.resolved(params);
    bool good = true;
    // iterates w_0 .. w_T: the trace holds w_0 .. w_{T-1}, the final node is last
    std::vector<Vec> path;
    for (const auto& rec : r.trace) path.push_back(rec.w);
    path.push_back(r.iterates.back());
    for (int k = 0; k < static_cast<int>(path.size()); ++k) {
      const double th = angle(path[k], t.w_star);
      const double aligned = std::sin(th) * smoothed_derivative_norm(t.sigma, std::cos(th));
      if (aligned < 40.0 * std::sqrt(opt)) break;
      const double excess = th - (res.phi(kConThetaBar, k) + kConSlack);
      worst = std::max(worst, excess);
      if (excess > 0.0) good = false;
    }
    if (good) ++ok;
  }
  report(6, "oracle-sign-contraction", ok >= kConNeed,
         fmt("%d/%d seeds with theta_t <= phi_t + %.2g (max excess %.3g)", ok, kSeeds, kConSlack, worst));
}

double op_norm(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void wedin() {
  const RegularityParams params{1.0, 1.0, kWedEps};
  const BandPartition part = build_band_partition(params);
  int checks = 0, holds = 0;
  std::vector<double> ratios;
  for (int s = 0; s < kSeeds; ++s) {
    GroundTruth t;
    t.w_star = truth_direction(kWedD, 400 + s);
    t.sigma = Activation::identity();
    t.B = 1e6;
    const Vec w = rotate_towards_random(t.w_star, kWedTheta, derive_seed(s, {tag("wed-w")}));
    Vec v = t.w_star - t.w_star.dot(w) * w;
    v.normalize();
    const Mat m_pop = std::pow(std::sin(kWedTheta), 2) * (1.0 - part.tail) * v * v.transpose();

    Dataset big = generate(t, 4 * kWedN, kWedD, derive_seed(s, {tag("wed")}));
    auto matrix = [&](const Dataset& d) {
      return build_spectral_matrix(compute_band_statistics(d, w, part), part, w, derive_seed(s, {tag("wed-power")}));
    };
    const Dataset a = big.slice(0, kWedN), b = big.slice(kWedN, 2 * kWedN), pooled = big.slice(0, 2 * kWedN);
    const SpectralMatrix ma = matrix(a), mb = matrix(b), mp = matrix(pooled);
    auto check = [&](const SpectralMatrix& x, const SpectralMatrix& y) {
      const double e = op_norm(x.m - y.m);
      const double gap = x.top.val - x.top.second;
      if (gap - e <= 0.0) return;
      ++checks;
      const double sin_angle = std::sin(std::min(angle(x.top.vec, y.top.vec), angle(x.top.vec, Vec(-y.top.vec))));
      if (sin_angle <= e / (gap - e) + kWedSlack) ++holds;
    };
    check(mp, ma);
    check(mp, mb);
    check(ma, mb);

    const SpectralMatrix m4 = matrix(big);
    ratios.push_back(op_norm(ma.m - m_pop) / op_norm(m4.m - m_pop));
  }
  const double med = median(ratios);
  report(7, "wedin-concentration", checks > 0 && holds == checks && med >= kWedRatioLo && med <= kWedRatioHi,
         fmt("Wedin bound held in %d/%d comparisons; median error ratio N->4N %.3f in [%.1f, %.1f]", holds, checks,
             med, kWedRatioLo, kWedRatioHi));
}

void initializer_contract() {
  std::string detail;
  bool all = true;
  for (double M : {0.0, 0.5, 1.0}) {
    const double bound = M > 0.0 ? std::min(std::numbers::pi / 16, 1.0 / M) : std::numbers::pi / 16;
    int ok = 0;
    double worst = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
      HalfspaceSample hs = generate_halfspace(kInitN, kInitD, M, kInitFlip, derive_seed(s, {tag("init-acc")}));
      HalfspaceInstance inst{hs.data, hs.data.y().mean()};
      const double th = angle(robust_halfspace_learn(inst, kRecEps, s), hs.w_star);
      worst = std::max(worst, th);
      if (th <= bound) ++ok;
    }
    all = all && ok >= kInitNeed;
    detail += fmt("M=%.1f: %d/%d within %.3f (worst %.4f); ", M, ok, kSeeds, bound, worst);
  }
  report(8, "initializer-contract", all, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<void()>>> all = {
      {1, noiseless_recovery}, {2, robustness}, {3, spectral_probes},  {4, isotonic_equivalence},
      {5, semigroup},          {6, contraction}, {7, wedin},        {8, initializer_contract}};
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  for (const auto& [id, fn] : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    std::printf("  (criterion %d took %.1fs)\n", id, seconds(t0));
  }
  std::printf("%s\n", failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED");
  return failures ? 1 : 0;
}
