#include "rsim/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rsim/gauss.hpp"

namespace rsim {

namespace {

struct Breakpoint {
  double pos;
  double delta;  // slope to the right minus slope to the left
};

double gap_bound(double beta, double dz) {
  if (dz <= 0.0) return 0.0;
  return std::isinf(beta) ? beta : beta * dz;
}

}  // namespace

void IsoInstance::validate() const {
  if (z.size() != y.size()) throw DimensionMismatch("iso: z and y lengths differ");
  if (!(beta > 0.0)) throw Error("iso: beta must be positive");
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i]) || !std::isfinite(y[i])) throw Error("iso: non-finite input");
    if (i && z[i] < z[i - 1]) throw Error("iso: projections must be sorted");
  }
}

IsoSolution solve_iso(const IsoInstance& inst) {
  inst.validate();
  const std::size_t n = inst.z.size();
  IsoSolution sol;
  if (n == 0) return sol;

  // Derivative D of the running value function, continuous and increasing.
  // L holds breakpoints left of the current interval (top = rightmost), R
  // those to the right (top = leftmost) stored relative to `shift`.
  std::vector<Breakpoint> L, R;
  L.reserve(2 * n);
  R.reserve(2 * n);
  double shift = 0.0;
  std::vector<double> m(n), gaps(n, 0.0);

  // State: a point x inside the current interval, D(x), and the slope k on
  // that interval.
  double x = inst.y[0], val = 0.0, k = 2.0;
  m[0] = x;
  for (std::size_t i = 1; i < n; ++i) {
    const double c = gap_bound(inst.beta, inst.z[i] - inst.z[i - 1]);
    gaps[i - 1] = c;
    // Minimizing over the window [v - c, v] flattens D to zero on [m, m + c]
    // and shifts its right part by c.
    if (c > 0.0) {
      L.push_back({x, -k});
      if (std::isinf(c)) {
        R.clear();
      } else {
        shift += c;
        R.push_back({x + c - shift, k});
      }
      k = 0.0;
    }
    // Add the derivative of (v - y_i)^2.
    val = 2.0 * (x - inst.y[i]);
    k += 2.0;
    // Walk to the new zero.
    for (;;) {
      if (val == 0.0) break;
      if (val > 0.0) {
        double left = L.empty() ? -INFINITY : L.back().pos;
        if (k > 0.0) {
          double r = x - val / k;
          if (r >= left) {
            x = r;
            break;
          }
        }
        val -= k * (x - left);
        x = left;
        R.push_back({left - shift, L.back().delta});
        k -= L.back().delta;
        L.pop_back();
      } else {
        double right = R.empty() ? INFINITY : R.back().pos + shift;
        if (k > 0.0) {
          double r = x - val / k;
          if (r <= right) {
            x = r;
            break;
          }
        }
        val += k * (right - x);
        x = right;
        L.push_back({right, R.back().delta});
        k += R.back().delta;
        R.pop_back();
      }
    }
    m[i] = x;
  }

  sol.v.resize(n);
  sol.v[n - 1] = m[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    double hi = sol.v[i + 1];
    double lo = std::isinf(gaps[i]) ? -INFINITY : hi - gaps[i];
    sol.v[i] = std::clamp(m[i], lo, hi);
  }
  sol.objective = iso_objective(inst, sol.v);
  return sol;
}

IsoSolution solve_iso_dense(const IsoInstance& inst) {
  inst.validate();
  const int n = static_cast<int>(inst.z.size());
  if (n > 500) throw Error("iso dense solver: instance too large");
  IsoSolution sol;
  if (n == 0) return sol;

  // Constraints a.v >= b with a = s (e_{i+1} - e_i): s = +1 is the order
  // constraint, s = -1 the slope bound. Zero gaps become equalities.
  struct Con {
    int i;
    double s;
    double b;
    bool eq;
  };
  std::vector<Con> cons;
  for (int i = 0; i + 1 < n; ++i) {
    double c = gap_bound(inst.beta, inst.z[i + 1] - inst.z[i]);
    if (c == 0.0) {
      cons.push_back({i, 1.0, 0.0, true});
    } else {
      cons.push_back({i, 1.0, 0.0, false});
      if (std::isfinite(c)) cons.push_back({i, -1.0, -c, false});
    }
  }
  auto lhs = [&](const Con& con, const Vec& v) { return con.s * (v[con.i + 1] - v[con.i]); };

  Vec y = Eigen::Map<const Vec>(inst.y.data(), n);
  Vec v = Vec::Constant(n, y.mean());
  std::vector<int> work;
  for (int k = 0; k < static_cast<int>(cons.size()); ++k) {
    if (cons[k].eq) work.push_back(k);
  }

  for (int iter = 0; iter < 100 * (n + 1); ++iter) {
    const int m = static_cast<int>(work.size());
    Mat K = Mat::Zero(n + m, n + m);
    Vec rhs = Vec::Zero(n + m);
    K.topLeftCorner(n, n).diagonal().setConstant(2.0);
    rhs.head(n) = -2.0 * (v - y);
    for (int r = 0; r < m; ++r) {
      const Con& con = cons[work[r]];
      K(n + r, con.i + 1) = con.s;
      K(n + r, con.i) = -con.s;
      K(con.i + 1, n + r) = -con.s;
      K(con.i, n + r) = con.s;
    }
    Vec sol_kkt = K.fullPivLu().solve(rhs);
    Vec p = sol_kkt.head(n);
    if (p.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + v.lpNorm<Eigen::Infinity>())) {
      int worst = -1;
      double most = -1e-12;
      for (int r = 0; r < m; ++r) {
        if (cons[work[r]].eq) continue;
        double lambda = sol_kkt[n + r];
        if (lambda < most) {
          most = lambda;
          worst = r;
        }
      }
      if (worst < 0) break;
      work.erase(work.begin() + worst);
      continue;
    }
    double alpha = 1.0;
    int blocking = -1;
    for (int k = 0; k < static_cast<int>(cons.size()); ++k) {
      if (std::find(work.begin(), work.end(), k) != work.end()) continue;
      const Con& con = cons[k];
      double ap = con.s * (p[con.i + 1] - p[con.i]);
      if (ap < 0.0) {
        double t = (con.b - lhs(con, v)) / ap;
        if (t < alpha) {
          alpha = std::max(t, 0.0);
          blocking = k;
        }
      }
    }
    v += alpha * p;
    if (blocking >= 0) work.push_back(blocking);
  }
  sol.v.assign(v.data(), v.data() + n);
  sol.objective = iso_objective(inst, sol.v);
  return sol;
}

std::vector<double> pava(const std::vector<double>& y) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      auto& b = blocks[blocks.size() - 1];
      auto& a = blocks[blocks.size() - 2];
      if (a.sum / a.count <= b.sum / b.count) break;
      a.sum += b.sum;
      a.count += b.count;
      blocks.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / b.count);
  return out;
}

double iso_violation(const IsoInstance& inst, const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    double d = v[i + 1] - v[i];
    double c = gap_bound(inst.beta, inst.z[i + 1] - inst.z[i]);
    worst = std::max(worst, -d);
    if (std::isfinite(c)) worst = std::max(worst, d - c);
  }
  return worst;
}

double iso_objective(const IsoInstance& inst, const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = (v[i] - inst.y[i]) * (v[i] - inst.y[i]);
  return pairwise_sum(r);
}

Interpolant interpolate(const IsoInstance& inst, const IsoSolution& sol, double B) {
  if (sol.v.size() != inst.z.size() || sol.v.empty()) throw Error("interpolate: solution does not match instance");
  Interpolant out;
  std::vector<double> knots, values;
  for (std::size_t i = 0; i < inst.z.size(); ++i) {
    double v = sol.v[i];
    if (std::abs(v) > B) {
      out.clamped = true;
      v = std::clamp(v, -B, B);
    }
    if (!knots.empty() && inst.z[i] == knots.back()) {
      values.back() = v;  // tied projections carry equal values
      continue;
    }
    // Solver round-off can leave tiny decreases; keep the link monotone.
    if (!values.empty()) v = std::max(v, values.back());
    knots.push_back(inst.z[i]);
    values.push_back(v);
  }
  // Drop interior knots that lie on the segment between their neighbours.
  std::vector<double> ck, cv;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (ck.size() >= 1 && i + 1 < knots.size()) {
      double s0 = (values[i] - cv.back()) / (knots[i] - ck.back());
      double s1 = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
      if (std::abs(s0 - s1) <= 1e-12 * std::max({1.0, std::abs(s0), std::abs(s1)})) continue;
    }
    ck.push_back(knots[i]);
    cv.push_back(values[i]);
  }
  out.u = PiecewiseLinear(std::move(ck), std::move(cv));
  return out;
}

Hypothesis interpolate_hypothesis(const IsoInstance& inst, const IsoSolution& sol, const Vec& w, double B) {
  return Hypothesis(w, interpolate(inst, sol, B).u, inst.beta, B);
}

double default_beta(const RegularityParams& p) {
  p.validate();
  return p.B * p.L / std::sqrt(p.eps);
}

CandidateFit fit_candidate(const Dataset& data, const Vec& w, double beta, double B) {
  if (data.empty()) throw Error("fit: empty dataset");
  if (data.dim() != w.size()) throw DimensionMismatch("fit: candidate dimension mismatch");
  const Vec unit = w / w.norm();
  const std::size_t n = data.size();
  const Vec proj = data.x() * unit;
  std::vector<std::pair<double, double>> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = {proj[static_cast<Eigen::Index>(i)], data.y()[static_cast<Eigen::Index>(i)]};
  }
  std::sort(pts.begin(), pts.end());
  IsoInstance inst;
  inst.beta = beta;
  inst.z.resize(n);
  inst.y.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    inst.z[k] = pts[k].first;
    inst.y[k] = pts[k].second;
  }
  IsoSolution sol = solve_iso(inst);
  Interpolant ip = interpolate(inst, sol, B);
  return {Hypothesis(unit, std::move(ip.u), beta, B), sol.objective / static_cast<double>(n), ip.clamped};
}

CandidateFit fit_constant(const Dataset& data, double B) {
  if (data.empty()) throw Error("fit: empty dataset");
  std::vector<double> y(data.y().data(), data.y().data() + data.size());
  double mean = pairwise_sum(y) / static_cast<double>(y.size());
  bool clamped = std::abs(mean) > B;
  mean = std::clamp(mean, -B, B);
  Vec w = Vec::Zero(data.dim());
  w[0] = 1.0;
  Hypothesis h(w, PiecewiseLinear::constant(mean), 0.0, B);
  return {h, squared_loss(data, h), clamped};
}

Selection test_and_select(const std::vector<Vec>& candidates, const Dataset& fit, const Dataset& holdout,
                          const RegularityParams& params, const SelectOptions& opt) {
  params.validate();
  if (candidates.empty() && !opt.add_constant) throw Error("select: no candidates");
  const double beta = opt.beta.value_or(default_beta(params));
  Selection sel;
  double best = INFINITY;
  const std::size_t total = candidates.size() + (opt.add_constant ? 1 : 0);
  for (std::size_t k = 0; k < total; ++k) {
    const bool constant = k == candidates.size();
    CandidateFit cf = constant ? fit_constant(fit, params.B) : fit_candidate(fit, candidates[k], beta, params.B);
    CandidateReport rep;
    rep.index = k;
    rep.constant = constant;
    rep.objective = cf.objective;
    rep.holdout_loss = squared_loss(holdout, cf.hypothesis);
    if (opt.truth && !constant) rep.angle_to_truth = angle(candidates[k], *opt.truth);
    if (cf.clamped) ++sel.clamp_warnings;
    if (rep.holdout_loss < best) {
      best = rep.holdout_loss;
      sel.index = k;
      sel.hypothesis = cf.hypothesis;
    }
    sel.candidates.push_back(rep);
  }
  return sel;
}

}  // namespace rsim
