#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rsim/gauss.hpp"
#include "rsim/pipeline.hpp"
#include "rsim/synth.hpp"

using namespace rsim;

namespace {

GroundTruth truth_for(int d, Activation sigma, double B, NoiseModel noise = NoNoise{}, std::uint64_t seed = 1) {
  Rng rng(seed);
  GroundTruth t;
  t.w_star = random_unit_vector(d, rng);
  t.sigma = std::move(sigma);
  t.B = B;
  t.noise = std::move(noise);
  return t;
}

}  // namespace

TEST_CASE("default angle grid") {
  RegularityParams p{1.0, 1.0, 0.05};
  auto g = default_theta_grid(p, 64, false);
  REQUIRE(g.size() == 32);
  CHECK(g.front() == doctest::Approx(0.05));
  CHECK(g.back() == doctest::Approx(std::numbers::pi / 2));
  // every angle has a grid value at most eps / L above it
  for (int i = 0; i < 1000; ++i) {
    double th = (i + 0.5) / 1000.0 * std::numbers::pi / 2;
    bool covered = std::any_of(g.begin(), g.end(), [&](double v) { return v >= th && v <= th + p.eps / p.L + 1e-12; });
    CHECK(covered);
  }
  RegularityParams fine{1.0, 1.0, 0.001};
  auto capped = default_theta_grid(fine, 64, false);
  CHECK(capped.size() <= 64);
  CHECK(capped.front() == doctest::Approx(0.001));
  CHECK(std::is_sorted(capped.begin(), capped.end()));
  CHECK(default_theta_grid(fine, 64, true).size() == 1571);
}

TEST_CASE("coarse to fine order is a permutation") {
  for (std::size_t n : {1u, 2u, 7u, 32u, 33u}) {
    auto o = coarse_to_fine_order(n);
    REQUIRE(o.size() == n);
    auto s = o;
    std::sort(s.begin(), s.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(s[i] == i);
    CHECK(o[0] == 0);
  }
  auto o = coarse_to_fine_order(9);
  CHECK(o[1] == 8);
  CHECK(o[2] == 4);
}

TEST_CASE("candidate dedup") {
  Vec a = Vec::Unit(3, 0), b = Vec::Unit(3, 1);
  Vec c = a;
  c[1] = 1e-12;
  auto out = dedup_candidates({a, b, c, a});
  CHECK(out.size() == 2);
}

TEST_CASE("clean linear model") {
  auto t = truth_for(5, Activation::identity().clamped(3.0), 3.0);
  auto data = generate(t, 80'000, 5, 2);
  PipelineConfig cfg;
  cfg.params = {3.0, 1.0, 0.05};
  cfg.pass_budget = 128;
  cfg.truth = t.w_star;
  auto r = run_pipeline(data, cfg);
  CHECK(r.report.holdout_loss <= 0.01);
  CHECK(std::sin(*r.report.angle_to_truth) <= 0.05);
  CHECK(r.report.eigen_computations <= 128);
  CHECK_FALSE(r.report.selected_constant);
  CHECK(r.report.pool_size == r.report.candidates.size());
}

TEST_CASE("constant labels select the constant sentinel") {
  RowMatrix x = gaussian_covariates(4000, 3, 1);
  Dataset data(x, Vec::Constant(4000, 0.7));
  PipelineConfig cfg;
  cfg.params = {1.0, 1.0, 0.2};
  auto r = run_pipeline(data, cfg);
  CHECK(r.report.selected_constant);
  CHECK(r.report.holdout_loss <= 1e-20);
  CHECK(r.hypothesis.u()(1.0) == doctest::Approx(0.7));
}

TEST_CASE("determinism and repeats") {
  auto t = truth_for(4, Activation::relu(), 2.0, ObliviousBounded{0.05, 1.0});
  auto data = generate(t, 20'000, 4, 3);
  PipelineConfig cfg;
  cfg.params = {2.0, 1.0, 0.2};
  cfg.pass_budget = 64;
  cfg.seed = 5;
  auto a = run_pipeline(data, cfg), b = run_pipeline(data, cfg);
  CHECK(a.hypothesis.w() == b.hypothesis.w());
  CHECK(a.hypothesis.u().knots() == b.hypothesis.u().knots());
  CHECK(a.hypothesis.u().values() == b.hypothesis.u().values());
  cfg.repeats = 3;
  auto c = run_pipeline(data, cfg);
  CHECK(c.report.holdout_loss <= a.report.holdout_loss);
}

TEST_CASE("split sizes and sample-size warning") {
  auto t = truth_for(3, Activation::relu(), 2.0);
  auto data = generate(t, 10'001, 3, 4);
  PipelineConfig cfg;
  cfg.params = {2.0, 1.0, 0.2};
  cfg.pass_budget = 16;
  auto r = run_pipeline(data, cfg);
  CHECK(r.report.n_init + r.report.n_spectral + r.report.n_fit + r.report.n_holdout == 10'001);
  CHECK(r.report.n_init == 2500);
  CHECK_FALSE(r.report.warnings.empty());
  cfg.paper_faithful = true;
  cfg.theta_grid = {0.3};
  cfg.schedule.T = 3;
  cfg.schedule.K = 2;
  auto pf = run_pipeline(data, cfg);
  CHECK(pf.report.n_fit == 10'001);
  CHECK(pf.report.n_spectral == 10'001);
  CHECK(pf.report.summary()["theta_grid"].size() == 1);
}

TEST_CASE("config validation") {
  auto data = generate(truth_for(3, Activation::relu(), 1.0), 100, 3, 1);
  PipelineConfig cfg;
  cfg.theta_grid = {2.0};
  CHECK_THROWS_AS(run_pipeline(data, cfg), Error);
  cfg.theta_grid = {};
  cfg.repeats = 0;
  CHECK_THROWS_AS(run_pipeline(data, cfg), Error);
}

TEST_CASE("a direction within eps of the truth is nearly optimal on clean data") {
  auto t = truth_for(6, Activation::relu(0.2, 1.0), 10.0);
  auto data = generate(t, 200'000, 6, 6);
  const double eps = 0.05;
  Vec w = rotate_towards_random(t.w_star, eps, 7);
  double opt = estimate_opt(t, data);
  double loss = squared_loss(data, w, t.sigma);
  CHECK(loss <= 2.0 * opt + 10.0 * eps);
}

TEST_CASE("relu loss is controlled by the smoothed derivative at small angles") {
  for (double M : {0.5, 1.0, 2.0}) {
    auto t = truth_for(6, Activation::relu(-M, 1.0), 20.0, ObliviousBounded{0.02, 1.0});
    auto data = generate(t, 200'000, 6, 8);
    const double theta = std::min(0.9 / M, 1.2);
    Vec w = rotate_towards_random(t.w_star, theta, 9);
    const double opt = estimate_opt(t, data);
    const double tn = smoothed_derivative_norm(t.sigma, std::cos(theta));
    const Vec z = data.x() * w;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double r = t.sigma(z[static_cast<Eigen::Index>(i)]) - data.y()[static_cast<Eigen::Index>(i)];
      s += r * r;
      s2 += r * r * r * r;
    }
    const double n = static_cast<double>(data.size());
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CAPTURE(M);
    CHECK(mean <= 5.0 * (opt + std::pow(std::sin(theta) * tn, 2)) + 3.0 * se);
  }
}
