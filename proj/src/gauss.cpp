#include "rsim/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "rsim/normal.hpp"

namespace rsim {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
// mu0 times the squared first eigenvector components.
QuadratureRule golub_welsch(int n, const std::function<double(int)>& offdiag, double mu0) {
  Vec diag = Vec::Zero(n);
  Vec sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = offdiag(k);
  Eigen::SelfAdjointEigenSolver<Mat> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw Error("quadrature: tridiagonal eigensolver failed");
  QuadratureRule r;
  r.order = n;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()[i];
    double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  // Symmetrize about 0.
  for (int i = 0; i < n / 2; ++i) {
    int j = n - 1 - i;
    double x = 0.5 * (r.nodes[j] - r.nodes[i]);
    double w = 0.5 * (r.weights[i] + r.weights[j]);
    r.nodes[i] = -x;
    r.nodes[j] = x;
    r.weights[i] = r.weights[j] = w;
  }
  if (n % 2) r.nodes[n / 2] = 0.0;
  return r;
}

const QuadratureRule& cached_rule(int order, bool hermite) {
  static std::mutex mu;
  static std::map<std::pair<int, bool>, QuadratureRule> cache;
  if (order < 1 || order > 2048) throw Error("quadrature: order out of range");
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(order, hermite);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  QuadratureRule r;
  if (hermite) {
    r = golub_welsch(order, [](int k) { return std::sqrt(static_cast<double>(k)); }, 1.0);
    double s = 0.0;
    for (double w : r.weights) s += w;
    for (double& w : r.weights) w /= s;
  } else {
    r = golub_welsch(order, [](int k) { return k / std::sqrt(4.0 * k * k - 1.0); }, 2.0);
  }
  return cache.emplace(key, std::move(r)).first->second;
}

double atom_mass(const UnivariateFn& g) {
  double s = 0.0;
  for (auto [a, h] : g.atoms) s += h * normal_pdf(a);
  return s;
}

double hermite_sum(const std::function<double(double)>& f, int order) {
  const auto& r = gauss_hermite_rule(order);
  double s = 0.0;
  for (int i = 0; i < r.order; ++i) s += r.weights[i] * f(r.nodes[i]);
  return s;
}

// Composite 20-point Gauss-Legendre of f * phi on [-R, R], split at the
// breaks, with panels of width at most h.
double split_sum(const std::function<double(double)>& f, const std::vector<double>& cuts, double h) {
  const auto& r = gauss_legendre_rule(20);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double a = cuts[k], b = cuts[k + 1];
    if (!(b > a)) continue;
    int panels = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
    double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      double lo = a + p * width;
      double mid = lo + 0.5 * width, half = 0.5 * width;
      double s = 0.0;
      for (int i = 0; i < r.order; ++i) {
        double z = mid + half * r.nodes[i];
        s += r.weights[i] * f(z) * normal_pdf(z);
      }
      total += half * s;
    }
  }
  return total;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

UnivariateFn constant_fn(double c) { return {[c](double) { return c; }, {}, {}}; }

}  // namespace

const QuadratureRule& gauss_hermite_rule(int order) { return cached_rule(order, true); }
const QuadratureRule& gauss_legendre_rule(int order) { return cached_rule(order, false); }

double gaussian_expectation(const UnivariateFn& g, const QuadOptions& opt) {
  double atoms = atom_mass(g);
  std::vector<double> cuts;
  for (double b : g.breaks) {
    if (b > -opt.radius && b < opt.radius) cuts.push_back(b);
  }
  if (cuts.empty() && g.breaks.empty()) {
    double prev = hermite_sum(g.f, opt.order);
    for (int n = 2 * opt.order; n <= opt.max_order; n *= 2) {
      double cur = hermite_sum(g.f, n);
      if (close(cur, prev, opt.tol)) return cur + atoms;
      prev = cur;
    }
    return prev + atoms;
  }
  cuts.push_back(-opt.radius);
  cuts.push_back(opt.radius);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double h = 1.0;
  double prev = split_sum(g.f, cuts, h);
  for (int level = 0; level < 8; ++level) {
    h *= 0.5;
    double cur = split_sum(g.f, cuts, h);
    if (close(cur, prev, opt.tol)) return cur + atoms;
    prev = cur;
  }
  return prev + atoms;
}

double ou_smooth(const UnivariateFn& g, double rho, double x, const QuadOptions& opt) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error("ou_smooth: rho must lie strictly inside (0, 1)");
  const double s = std::sqrt(1.0 - rho * rho);
  UnivariateFn inner;
  inner.f = [&g, rho, s, x](double z) { return g.f(rho * x + s * z); };
  inner.breaks.reserve(g.breaks.size());
  for (double a : g.breaks) inner.breaks.push_back((a - rho * x) / s);
  // delta(rho x + s z - a) = delta(z - (a - rho x)/s) / s
  for (auto [a, h] : g.atoms) inner.atoms.emplace_back((a - rho * x) / s, h / s);
  return gaussian_expectation(inner, opt);
}

SmoothedFunction::SmoothedFunction(UnivariateFn base, double rho, QuadOptions opt)
    : base_(std::move(base)), rho_(rho), opt_(opt) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error("smoothed function: rho must lie strictly inside (0, 1)");
}

UnivariateFn SmoothedFunction::as_function() const {
  UnivariateFn out;
  auto self = *this;
  out.f = [self](double x) { return self(x); };
  for (double a : base_.breaks) out.breaks.push_back(a / rho_);
  for (auto [a, h] : base_.atoms) out.breaks.push_back(a / rho_);
  std::sort(out.breaks.begin(), out.breaks.end());
  out.breaks.erase(std::unique(out.breaks.begin(), out.breaks.end()), out.breaks.end());
  return out;
}

double l2_inner(const UnivariateFn& f, const UnivariateFn& g, const QuadOptions& opt) {
  if (!f.atoms.empty() || !g.atoms.empty()) throw Error("l2_inner: integrands with point masses are not in L2");
  UnivariateFn prod;
  prod.f = [&f, &g](double z) { return f.f(z) * g.f(z); };
  prod.breaks = f.breaks;
  prod.breaks.insert(prod.breaks.end(), g.breaks.begin(), g.breaks.end());
  std::sort(prod.breaks.begin(), prod.breaks.end());
  prod.breaks.erase(std::unique(prod.breaks.begin(), prod.breaks.end()), prod.breaks.end());
  return gaussian_expectation(prod, opt);
}

double l2_norm(const UnivariateFn& g, const QuadOptions& opt) { return std::sqrt(std::max(0.0, l2_inner(g, g, opt))); }

UnivariateFn as_function(const Activation& sigma) {
  return {[sigma](double z) { return sigma(z); }, sigma.breakpoints(), {}};
}

UnivariateFn derivative_function(const Activation& sigma) {
  UnivariateFn out{[sigma](double z) { return sigma.derivative(z); }, sigma.breakpoints(), {}};
  out.atoms = sigma.jumps();
  return out;
}

double smoothed_derivative_norm(const Activation& sigma, double rho, const QuadOptions& opt) {
  SmoothedFunction t(derivative_function(sigma), rho, opt);
  return l2_norm(t.as_function(), opt);
}

SemigroupReport check_semigroup_identities(const UnivariateFn& f, double t, double s, const QuadOptions& opt) {
  SemigroupReport rep;
  SmoothedFunction ts(f, s, opt);
  SmoothedFunction outer(ts.as_function(), t, opt);
  SmoothedFunction direct(f, t * s, opt);
  for (int k = 0; k <= 24; ++k) {
    double x = -3.0 + 0.25 * k;
    rep.composition_residual = std::max(rep.composition_residual, std::abs(outer(x) - direct(x)));
  }
  double base = l2_norm(f, opt);
  for (double rho : {t, s, t * s}) {
    double n = l2_norm(SmoothedFunction(f, rho, opt).as_function(), opt);
    rep.norm_ratio = std::max(rep.norm_ratio, base > 0.0 ? n / base : (n > 0.0 ? INFINITY : 1.0));
  }
  return rep;
}

SmoothingErrorReport check_smoothing_error(const UnivariateFn& f, const UnivariateFn& df, double rho,
                                           const QuadOptions& opt) {
  UnivariateFn tf = SmoothedFunction(f, rho, opt).as_function();
  UnivariateFn diff;
  diff.f = [&tf, &f](double z) { return tf.f(z) - f.f(z); };
  diff.breaks = tf.breaks;
  diff.breaks.insert(diff.breaks.end(), f.breaks.begin(), f.breaks.end());
  std::sort(diff.breaks.begin(), diff.breaks.end());
  SmoothingErrorReport rep;
  rep.lhs = l2_inner(diff, diff, opt);
  rep.rhs = 3.0 * (1.0 - rho) * l2_inner(df, df, opt);
  return rep;
}

double angle(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) throw DimensionMismatch("angle: dimension mismatch");
  double nu = u.norm(), nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw Error("angle: zero vector");
  Vec a = u / nu, b = v / nv;
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

std::vector<CatalogEntry> function_catalog() {
  std::vector<CatalogEntry> cat;
  cat.push_back({"constant", constant_fn(1.5), constant_fn(0.0), true});
  for (int p = 1; p <= 6; ++p) {
    UnivariateFn f{[p](double z) { return std::pow(z, p); }, {}, {}};
    UnivariateFn df{[p](double z) { return p * std::pow(z, p - 1); }, {}, {}};
    cat.push_back({"z^" + std::to_string(p), f, df, true});
  }
  auto add_activation = [&cat](const std::string& name, const Activation& a) {
    cat.push_back({name, as_function(a), derivative_function(a), a.jumps().empty()});
  };
  add_activation("relu", Activation::relu());
  add_activation("relu_bias", Activation::relu(0.5));
  add_activation("relu_clamped", Activation::relu(0.0, 1.0).clamped(1.5));
  add_activation("identity_clamped", Activation::identity().clamped(1.0));
  add_activation("tanh_ramp", Activation(BoundedSmooth{SmoothShape::Tanh, 1.0, 0.5, 0.2}));
  add_activation("erf_ramp", Activation(BoundedSmooth{SmoothShape::Erf, 2.0, 1.0, -0.3}));
  add_activation("piecewise_linear", Activation(PiecewiseLinear({-1.0, 0.0, 0.5, 2.0}, {-1.0, -0.5, 0.5, 0.75})));
  add_activation("threshold", Activation::threshold(-0.3));
  return cat;
}

}  // namespace rsim
