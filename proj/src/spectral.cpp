#include "rsim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rsim/normal.hpp"

namespace rsim {

double BandPartition::edge(std::size_t j) const {
  return j >= bands ? m_prime : -m_prime + static_cast<double>(j) * delta;
}

std::optional<std::size_t> BandPartition::band_of(double z) const {
  double u = (z + m_prime) / delta;
  if (!(u >= 0.0)) return std::nullopt;
  auto j = static_cast<std::size_t>(u);
  if (j >= bands) return std::nullopt;
  return j;
}

BandPartition build_band_partition(const RegularityParams& params, std::size_t cap) {
  params.validate();
  BandPartition p;
  const double bl = params.B * params.L;
  p.delta = params.eps * params.eps / (bl * bl);
  const double target_tail = std::min(p.delta, 1.0);
  // Smallest multiple of delta with two-sided tail <= target.
  double q = target_tail >= 1.0 ? 0.0 : normal_quantile(1.0 - 0.5 * target_tail);
  double steps = std::ceil(q / p.delta - 1e-9);
  if (steps < 1.0) steps = 1.0;
  if (2.0 * steps > static_cast<double>(cap)) {
    std::ostringstream msg;
    msg << "band partition would need " << 2.0 * steps << " bands (cap " << cap
        << "); increase eps or decrease B*L for a desk-scale run";
    throw Error(msg.str());
  }
  p.bands = 2 * static_cast<std::size_t>(steps);
  p.m_prime = steps * p.delta;
  while (2.0 * normal_sf(p.m_prime) > target_tail) {
    ++p.bands;
    ++p.bands;
    p.m_prime += p.delta;
  }
  p.tail = 2.0 * normal_sf(p.m_prime);
  p.probs.resize(p.bands);
  for (std::size_t j = 0; j < p.bands; ++j) p.probs[j] = normal_interval_prob(p.edge(j), p.edge(j + 1));
  return p;
}

void BandWorkspace::prepare(int dim, std::size_t bands) {
  if (sum_yx.rows() == dim && static_cast<std::size_t>(sum_yx.cols()) == bands) return;
  sum_yx = Mat::Zero(dim, static_cast<Eigen::Index>(bands));
  sum_yz.assign(bands, 0.0);
  count.assign(bands, 0);
  touched.clear();
}

BandStatistics compute_band_statistics(const Dataset& data, const Vec& w, const BandPartition& partition,
                                       BandWorkspace* workspace) {
  if (data.dim() != w.size()) throw DimensionMismatch("band statistics: direction dimension mismatch");
  const int d = data.dim();
  BandWorkspace local;
  BandWorkspace& ws = workspace ? *workspace : local;
  ws.prepare(d, partition.bands);

  const Vec z = data.x() * w;
  const double* y = data.y().data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto j = partition.band_of(z[static_cast<Eigen::Index>(i)]);
    if (!j) continue;
    if (ws.count[*j]++ == 0) ws.touched.push_back(*j);
    const double yi = y[i];
    const double* xi = data.row(i).data();
    double* acc = ws.sum_yx.col(static_cast<Eigen::Index>(*j)).data();
    for (int k = 0; k < d; ++k) acc[k] += yi * xi[k];
    ws.sum_yz[*j] += yi * z[static_cast<Eigen::Index>(i)];
  }

  std::sort(ws.touched.begin(), ws.touched.end());
  BandStatistics st;
  st.n = data.size();
  st.band = ws.touched;
  st.g.resize(d, static_cast<Eigen::Index>(st.band.size()));
  st.counts.resize(st.band.size());
  const double inv_n = data.empty() ? 0.0 : 1.0 / static_cast<double>(data.size());
  for (std::size_t k = 0; k < st.band.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(st.band[k]);
    Vec g = (ws.sum_yx.col(j) - ws.sum_yz[st.band[k]] * w) * inv_n;
    g -= w.dot(g) * w;
    st.g.col(static_cast<Eigen::Index>(k)) = g;
    st.counts[k] = ws.count[st.band[k]];
    ws.sum_yx.col(j).setZero();
    ws.sum_yz[st.band[k]] = 0.0;
    ws.count[st.band[k]] = 0;
  }
  ws.touched.clear();
  return st;
}

namespace {

// Power iteration on P m P, with P the projector onto the complement of
// span(basis) (orthonormal columns).
struct PowerRun {
  Vec vec;
  double val = 0.0;
  bool degenerate = false;
  int iterations = 0;
};

PowerRun power_iterate(const Mat& m, const Mat& basis, std::uint64_t seed, const PowerOptions& opt) {
  const auto d = m.rows();
  auto project = [&basis](Vec& x) {
    for (Eigen::Index c = 0; c < basis.cols(); ++c) x -= basis.col(c).dot(x) * basis.col(c);
    // Second pass for numerical orthogonality.
    for (Eigen::Index c = 0; c < basis.cols(); ++c) x -= basis.col(c).dot(x) * basis.col(c);
  };
  Mat p = Mat::Identity(d, d) - basis * basis.transpose();
  Mat a = p * m * p;
  a = 0.5 * (a + a.transpose()).eval();

  PowerRun run;
  Rng rng(seed);
  Vec x = random_unit_vector(static_cast<int>(d), rng);
  project(x);
  if (x.norm() < 1e-8) {
    for (Eigen::Index k = 0; k < d; ++k) {
      x = Vec::Unit(d, k);
      project(x);
      if (x.norm() > 1e-8) break;
    }
  }
  double n0 = x.norm();
  if (n0 < 1e-8) {  // complement is empty
    run.vec = Vec::Zero(d);
    run.degenerate = true;
    return run;
  }
  x /= n0;
  if (a.lpNorm<Eigen::Infinity>() == 0.0) {
    run.vec = x;
    run.degenerate = true;
    return run;
  }
  double q = x.dot(a * x);
  for (int it = 1; it <= opt.max_iter; ++it) {
    Vec y = a * x;
    project(y);
    double ny = y.norm();
    if (ny == 0.0) {  // x lies in the null space; restart along a coordinate
      run.vec = x;
      run.val = 0.0;
      run.iterations = it;
      return run;
    }
    x = y / ny;
    double qn = x.dot(a * x);
    if (std::abs(qn - q) <= opt.tol * std::max(std::abs(qn), 1e-300)) {
      run.vec = x;
      run.val = qn;
      run.iterations = it;
      return run;
    }
    q = qn;
  }
  std::ostringstream msg;
  msg << "power iteration did not converge in " << opt.max_iter << " iterations (last Rayleigh quotient " << q
      << "); the top eigenvalue is likely nearly degenerate";
  throw ConvergenceError(msg.str());
}

}  // namespace

EigenPair top_eigenpair(const Mat& m, const Vec& w, std::uint64_t seed, const PowerOptions& opt) {
  if (m.rows() != m.cols() || m.rows() != w.size()) throw DimensionMismatch("top_eigenpair: shape mismatch");
  Mat basis(w.size(), 1);
  basis.col(0) = w / w.norm();
  PowerRun first = power_iterate(m, basis, derive_seed(seed, {1}), opt);
  EigenPair out;
  out.vec = first.vec;
  out.val = first.val;
  out.degenerate = first.degenerate;
  out.iterations = first.iterations;
  if (first.degenerate || w.size() <= 2) return out;
  Mat basis2(w.size(), 2);
  basis2.col(0) = basis.col(0);
  basis2.col(1) = first.vec;
  try {
    PowerRun second = power_iterate(m, basis2, derive_seed(seed, {2}), opt);
    out.second = second.val;
    out.iterations += second.iterations;
  } catch (const ConvergenceError&) {
    // The second eigenvalue only feeds diagnostics; fall back to a dense solve.
    Mat p = Mat::Identity(w.size(), w.size()) - basis2 * basis2.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(p * m * p);
    out.second = es.eigenvalues().maxCoeff();
  }
  return out;
}

SpectralMatrix build_spectral_matrix(const BandStatistics& stats, const BandPartition& partition, const Vec& w,
                                     std::uint64_t seed) {
  Mat h(stats.g.rows(), stats.g.cols());
  for (Eigen::Index k = 0; k < stats.g.cols(); ++k) {
    h.col(k) = stats.g.col(k) / std::sqrt(partition.probs[stats.band[static_cast<std::size_t>(k)]]);
  }
  SpectralMatrix sm;
  sm.m = Mat::Zero(w.size(), w.size());
  if (h.cols() > 0) {
    sm.m.selfadjointView<Eigen::Lower>().rankUpdate(h);
    sm.m = sm.m.selfadjointView<Eigen::Lower>();
  }
  sm.top = top_eigenpair(sm.m, w, seed);
  return sm;
}

Vec spectral_step(const Vec& w, const Vec& direction, double eta) {
  Vec out = w - eta * direction;
  return out / out.norm();
}

Schedule Schedule::resolved(const RegularityParams& params) const {
  params.validate();
  Schedule s = *this;
  if (s.T <= 0) s.T = static_cast<int>(std::ceil(8.0 * std::log(std::max(params.L, 2.0) / params.eps)));
  s.T = std::max(s.T, 1);
  if (s.K <= 0) {
    double k = std::ceil(std::ldexp(std::log(100.0), std::min(s.T, 40)));
    s.K = static_cast<int>(std::min(k, 4096.0));
  }
  if (!(decay > 0.0 && decay < 1.0)) throw Error("schedule: decay must lie in (0, 1)");
  if (!(step_fraction > 0.0)) throw Error("schedule: step fraction must be positive");
  return s;
}

double Schedule::phi(double theta_bar, int t) const { return theta_bar * std::pow(1.0 - decay, t); }
double Schedule::eta(double theta_bar, int t) const { return step_fraction * std::sin(phi(theta_bar, t)); }

SignChooser random_signs() {
  return [](const SignContext& c) { return (c.rng() & 1u) ? 1 : -1; };
}

SignChooser oracle_signs(Vec truth) {
  return [truth = std::move(truth)](const SignContext& c) { return c.v.dot(truth) > 0.0 ? -1 : 1; };
}

namespace {

struct Node {
  Vec w;
  int depth = 0;
  std::uint64_t key = 0;
  bool evaluated = false;
  bool degenerate = false;
  Vec v;
  double eigval = 0.0;
  double gap = 0.0;
  int child[3] = {-1, -1, -1};  // sign -1, sign +1, frozen
};

}  // namespace

SpectralResult spectral_optimization(const Dataset& data, double theta_bar, const Vec& w0,
                                     const RegularityParams& params, const Schedule& schedule, std::uint64_t seed,
                                     const SpectralOptions& opt) {
  if (!(theta_bar > 0.0 && theta_bar <= std::numbers::pi / 2 + 1e-12)) {
    throw Error("spectral optimization: theta_bar must lie in (0, pi/2]");
  }
  if (data.empty()) throw Error("spectral optimization: empty dataset");
  if (w0.size() != data.dim()) throw DimensionMismatch("spectral optimization: start dimension mismatch");
  if (std::abs(w0.norm() - 1.0) > 1e-6) throw Error("spectral optimization: start vector must be unit norm");
  const Schedule sch = schedule.resolved(params);
  const BandPartition partition = build_band_partition(params);
  const SignChooser chooser = opt.chooser ? opt.chooser : random_signs();
  BandWorkspace ws;

  SpectralResult res;
  std::vector<Node> nodes;
  Node root;
  root.w = w0 / w0.norm();
  root.key = mix64(seed ^ 0x5eedULL);
  nodes.push_back(std::move(root));

  auto evaluate_node = [&](Node& node) -> bool {
    if (node.evaluated) return true;
    if (opt.max_nodes && res.eigen_computations >= *opt.max_nodes) return false;
    BandStatistics st = compute_band_statistics(data, node.w, partition, &ws);
    SpectralMatrix sm = build_spectral_matrix(st, partition, node.w, derive_seed(seed, {tag("power"), node.key}));
    ++res.eigen_computations;
    node.evaluated = true;
    node.degenerate = sm.top.degenerate;
    node.v = sm.top.vec;
    node.eigval = sm.top.val;
    node.gap = sm.top.val - sm.top.second;
    if (node.degenerate) ++res.degenerate_steps;
    return true;
  };

  for (std::size_t k = 0; k < static_cast<std::size_t>(sch.K) && !res.budget_exhausted; ++k) {
    Rng rng = make_rng(seed, {tag("restart"), k});
    std::size_t cur = 0;
    bool complete = true;
    for (int t = 0; t < sch.T; ++t) {
      if (!evaluate_node(nodes[cur])) {
        res.budget_exhausted = true;
        complete = false;
        break;
      }
      const double eta = sch.eta(theta_bar, t);
      int sign = 0;
      int slot = 2;
      if (!nodes[cur].degenerate) {
        sign = chooser({k, t, nodes[cur].w, nodes[cur].v, rng}) >= 0 ? 1 : -1;
        slot = sign > 0 ? 1 : 0;
      }
      if (opt.record_trace) {
        res.trace.push_back({k, t, nodes[cur].w, sign, eta, sch.phi(theta_bar, t), nodes[cur].eigval, nodes[cur].gap});
      }
      int next = nodes[cur].child[slot];
      if (next < 0) {
        Node child;
        child.w = sign == 0 ? nodes[cur].w : spectral_step(nodes[cur].w, sign * nodes[cur].v, eta);
        child.depth = t + 1;
        child.key = mix64(nodes[cur].key ^ static_cast<std::uint64_t>(slot + 1));
        next = static_cast<int>(nodes.size());
        nodes[cur].child[slot] = next;
        nodes.push_back(std::move(child));
      }
      cur = static_cast<std::size_t>(next);
    }
    if (complete) ++res.restarts_completed;
  }

  res.iterates.reserve(nodes.size());
  for (const auto& n : nodes) res.iterates.push_back(n.w);
  return res;
}

}  // namespace rsim
