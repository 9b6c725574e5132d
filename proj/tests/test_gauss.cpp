#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "rsim/gauss.hpp"
#include "rsim/rng.hpp"

using namespace rsim;

namespace {

UnivariateFn fn(std::function<double(double)> f) { return UnivariateFn{std::move(f), {}, {}}; }

double double_factorial(int n) {
  double r = 1.0;
  for (int k = n; k > 1; k -= 2) r *= k;
  return r;
}

}  // namespace

TEST_CASE("hermite rule reproduces gaussian moments") {
  const auto& r = gauss_hermite_rule(40);
  double sum = 0.0;
  for (double w : r.weights) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
  for (int k = 0; k <= 10; ++k) {
    double m = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) m += r.weights[i] * std::pow(r.nodes[i], 2 * k);
    CHECK(m == doctest::Approx(double_factorial(2 * k - 1)).epsilon(1e-10));
  }
}

TEST_CASE("legendre rule integrates polynomials") {
  const auto& r = gauss_legendre_rule(20);
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 8);
  CHECK(s == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("ou smoothing examples") {
  CHECK(ou_smooth(fn([](double) { return 4.0; }), 0.3, 1.7) == doctest::Approx(4.0));
  CHECK(ou_smooth(fn([](double z) { return z; }), 0.5, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  UnivariateFn step{[](double z) { return z >= 0.0 ? 1.0 : 0.0; }, {0.0}, {}};
  for (double rho : {0.1, 0.5, 0.9}) CHECK(ou_smooth(step, rho, 0.0) == doctest::Approx(0.5).epsilon(1e-9));
  // T_rho 1{z >= 0} (x) = Phi(rho x / sqrt(1 - rho^2))
  double rho = 0.8, x = 0.7;
  double expect = 0.5 * std::erfc(-(rho * x / std::sqrt(1 - rho * rho)) / std::sqrt(2.0));
  CHECK(ou_smooth(step, rho, x) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("l2 norms") {
  CHECK(l2_norm(fn([](double z) { return z; })) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(l2_norm(fn([](double) { return 3.0; })) == doctest::Approx(3.0).epsilon(1e-12));
  UnivariateFn step{[](double z) { return z >= 0.0 ? 1.0 : 0.0; }, {0.0}, {}};
  CHECK(l2_norm(step) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  UnivariateFn atom{[](double) { return 0.0; }, {}, {{0.0, 1.0}}};
  CHECK_THROWS(l2_norm(atom));
}

TEST_CASE("atoms contribute their mass times the density") {
  UnivariateFn atom{[](double) { return 0.0; }, {}, {{1.0, 2.0}}};
  CHECK(gaussian_expectation(atom) == doctest::Approx(2.0 * std::exp(-0.5) / std::sqrt(2 * std::numbers::pi)));
}

TEST_CASE("smoothed derivative norm") {
  CHECK(smoothed_derivative_norm(Activation::identity(), 0.3) == doctest::Approx(1.0).epsilon(1e-10));
  auto relu = Activation::relu();
  CHECK(smoothed_derivative_norm(relu, 0.9) >= smoothed_derivative_norm(relu, 0.5));

  // closed form: E[Phi(a z)^2] = 1/4 + asin(a^2 / (1 + a^2)) / (2 pi), a^2/(1+a^2) = rho^2
  const double rho = 0.5;
  double exact = std::sqrt(0.25 + std::asin(rho * rho) / (2 * std::numbers::pi));
  CHECK(smoothed_derivative_norm(relu, rho) == doctest::Approx(exact).epsilon(1e-8));

  // Monte-Carlo oracle on 1e6 draws
  Rng rng(123);
  std::normal_distribution<double> normal;
  const int n = 1'000'000;
  const double s = std::sqrt(1 - rho * rho);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double p = 0.5 * std::erfc(-(rho * normal(rng) / s) / std::sqrt(2.0));
    sum += p * p;
    sum2 += p * p * p * p;
  }
  double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  double v = smoothed_derivative_norm(relu, rho);
  CHECK(std::abs(v * v - mean) <= 3.0 * se);
}

TEST_CASE("semigroup identities") {
  auto sq = check_semigroup_identities(fn([](double z) { return z * z; }), 0.6, 0.5);
  CHECK(sq.composition_residual <= 1e-8);
  auto one = check_semigroup_identities(fn([](double) { return 1.0; }), 0.6, 0.5);
  CHECK(one.composition_residual == 0.0);
  auto cube = check_semigroup_identities(fn([](double z) { return z * z * z; }), 0.7, 0.2);
  CHECK(cube.norm_ratio <= 1.0 + 1e-10);
}

TEST_CASE("smoothing error bound") {
  auto lin = check_smoothing_error(fn([](double z) { return z; }), fn([](double) { return 1.0; }), 0.9);
  CHECK(lin.lhs == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(lin.rhs == doctest::Approx(0.3).epsilon(1e-12));
  auto c = check_smoothing_error(fn([](double) { return 2.0; }), fn([](double) { return 0.0; }), 0.5);
  CHECK(c.lhs == doctest::Approx(0.0));
  CHECK(c.rhs == 0.0);
  UnivariateFn ramp = fn([](double z) { return std::tanh(2 * z); });
  UnivariateFn dramp = fn([](double z) { double t = std::tanh(2 * z); return 2 * (1 - t * t); });
  for (double rho : {0.5, 0.9, 0.99}) {
    auto r = check_smoothing_error(ramp, dramp, rho);
    CHECK(r.lhs <= r.rhs);
  }
}

TEST_CASE("catalog functions satisfy the suite bounds") {
  for (const auto& e : function_catalog()) {
    CAPTURE(e.name);
    double base = l2_norm(e.f);
    for (double rho : {0.3, 0.7}) CHECK(l2_norm(SmoothedFunction(e.f, rho).as_function()) <= base * (1 + 1e-6));
  }
}

TEST_CASE("angles") {
  Vec u(2), v(2);
  u << 1, 0;
  v << 1, 1;
  CHECK(angle(u, u) == 0.0);
  CHECK(angle(u, Vec::Unit(2, 1)) == doctest::Approx(std::numbers::pi / 2));
  CHECK(angle(u, v / std::sqrt(2.0)) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-14));
  CHECK(angle(u, -u) == doctest::Approx(std::numbers::pi));
}
