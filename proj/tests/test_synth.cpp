#include "doctest.h"

#include <cmath>
#include <numbers>

#include "rsim/gauss.hpp"
#include "rsim/synth.hpp"

using namespace rsim;

namespace {

GroundTruth relu_truth(int d, NoiseModel noise, double B = 100.0) {
  GroundTruth t;
  t.w_star = Vec::Unit(d, 0);
  t.sigma = Activation::relu();
  t.noise = std::move(noise);
  t.B = B;
  return t;
}

}  // namespace

TEST_CASE("covariate moments") {
  const std::size_t n = 200'000;
  const int d = 6;
  RowMatrix x = gaussian_covariates(n, d, 3);
  for (int k = 0; k < d; ++k) {
    double mean = x.col(k).mean();
    double var = (x.col(k).array() - mean).square().mean();
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) <= 4.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("generation is deterministic under seed") {
  auto t = relu_truth(4, ObliviousBounded{0.1, 0.5});
  auto a = generate(t, 10'000, 4, 9), b = generate(t, 10'000, 4, 9), c = generate(t, 10'000, 4, 10);
  CHECK(a.x() == b.x());
  CHECK(a.y() == b.y());
  CHECK_FALSE(a.y() == c.y());
  auto s1 = generate_halfspace(5000, 3, 0.5, 0.05, 2), s2 = generate_halfspace(5000, 3, 0.5, 0.05, 2);
  CHECK(s1.data.y() == s2.data.y());
}

TEST_CASE("clean labels have zero opt") {
  auto t = relu_truth(3, NoNoise{});
  auto data = generate(t, 50'000, 3, 1);
  CHECK(estimate_opt(t, data) <= 1e-12);
}

TEST_CASE("oblivious noise") {
  SUBCASE("worst-case bound") {
    auto t = relu_truth(3, ObliviousBounded{0.1, 1.0}, 1.0);
    t.sigma = Activation::relu().clamped(1.0);
    auto g = generate_with_info(t, 100'000, 3, 2);
    const double rate = static_cast<double>(g.corrupted) / 100'000.0;
    CHECK(estimate_opt(t, g.data) <= rate * 4.0);
  }
  SUBCASE("second moment at rate 0.05") {
    auto t = relu_truth(3, ObliviousBounded{0.05, 1.0});
    auto data = generate(t, 1'000'000, 3, 3);
    // each corruption adds exactly magnitude^2 = 1
    const double se = std::sqrt(0.05 * 0.95 / 1e6);
    CHECK(std::abs(estimate_opt(t, data) - 0.05) <= 3.0 * se);
  }
}

TEST_CASE("adversarial budgets are exact") {
  auto band = relu_truth(4, AdversarialBand{0.05, -0.5, 0.5, std::nullopt}, 2.0);
  auto g = generate_with_info(band, 12'345, 4, 4);
  CHECK(g.corrupted == static_cast<std::size_t>(std::floor(0.05 * 12'345)));
  auto tail = relu_truth(4, SignFlipTail{0.03}, 50.0);
  auto h = generate_with_info(tail, 10'001, 4, 5);
  CHECK(h.corrupted == 300);
  auto hs = generate_halfspace(10'000, 4, 1.0, 0.05, 6);
  CHECK(hs.flipped == 500);
}

TEST_CASE("band adversary pushes labels against the trend") {
  auto t = relu_truth(3, AdversarialBand{0.02, -0.5, 0.5, std::nullopt}, 2.0);
  auto clean_t = relu_truth(3, NoNoise{}, 2.0);
  auto noisy = generate(t, 20'000, 3, 7), clean = generate(clean_t, 20'000, 3, 7);
  CHECK(noisy.x() == clean.x());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    if (noisy.y()[i] == clean.y()[i]) continue;
    ++changed;
    double z = noisy.x()(i, 0);
    CHECK(noisy.y()[i] == (z < 0.0 ? 2.0 : -2.0));
  }
  CHECK(changed == 400);
}

TEST_CASE("rotation hits the requested angle") {
  Rng rng(1);
  Vec w = random_unit_vector(7, rng);
  for (double th : {0.01, 0.5, 1.5}) CHECK(angle(rotate_towards_random(w, th, 3), w) == doctest::Approx(th).epsilon(1e-12));
}

TEST_CASE("population probe: linear model orthogonal to the truth") {
  GroundTruth t;
  t.w_star = Vec::Unit(5, 1);
  t.sigma = Activation::identity();
  t.B = 1e6;
  ProbeOptions opt;
  opt.mc_budget = 1'000'000;
  auto rec = population_probe(t, Vec::Unit(5, 0), opt, 1);
  auto p = build_band_partition(opt.partition);
  CHECK(std::abs(rec.alignment.value - (1.0 - p.tail)) <= 3.0 * rec.alignment.se);
  CHECK(rec.top_correlation >= 0.99);
  for (const auto& e : rec.orthogonal) CHECK(std::abs(e.value) <= 3.0 * e.se + 1e-12);
}

TEST_CASE("population probe: relu gradient correlation") {
  auto t = relu_truth(5, ObliviousBounded{0.01, 1.0});
  Vec w = rotate_towards_random(t.w_star, std::numbers::pi / 6, 4);
  ProbeOptions opt;
  opt.mc_budget = 400'000;
  auto rec = population_probe(t, w, opt, 2);
  const double signal = std::pow(std::sin(rec.theta) * rec.smoothed_norm, 2);
  CHECK(rec.gradient_correlation.value >= 2.0 / 3.0 * signal - 3.0 * rec.gradient_correlation.se);
  CHECK(rec.opt == doctest::Approx(0.01).epsilon(0.2));
}

TEST_CASE("debiasing removes the diagonal inflation") {
  GroundTruth t;
  t.w_star = Vec::Unit(4, 1);
  t.sigma = Activation::identity();
  t.B = 1e6;
  auto data = generate(t, 20'000, 4, 8);
  auto p = build_band_partition({1.0, 1.0, 0.1});
  Vec w = Vec::Unit(4, 0);
  Mat plain = empirical_matrix(data, w, p), deb = debiased_matrix(data, w, p);
  // I / N = 516 / 2e4 inflation in the pure-noise directions
  CHECK(plain(2, 2) > 0.01);
  CHECK(std::abs(deb(2, 2)) < 0.01);
  CHECK(std::abs(deb(1, 1) - 0.99) < 0.1);
}
