#include "rsim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rsim/gauss.hpp"
#include "rsim/rng.hpp"

namespace rsim {

void GroundTruth::validate() const {
  if (w_star.size() == 0 || std::abs(w_star.norm() - 1.0) > 1e-9) throw Error("ground truth: w* must be a unit vector");
  if (!(B > 0.0)) throw Error("ground truth: B must be positive");
  auto check_rate = [](double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error("ground truth: noise rate must lie in [0, 1]");
  };
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (!std::is_same_v<T, NoNoise>) check_rate(m.rate);
        if constexpr (std::is_same_v<T, ObliviousBounded>) {
          if (m.magnitude < 0.0) throw Error("ground truth: magnitude must be non-negative");
        }
        if constexpr (std::is_same_v<T, AdversarialBand>) {
          if (!(m.lo <= m.hi)) throw Error("ground truth: band needs lo <= hi");
        }
      },
      noise);
}

RowMatrix gaussian_covariates(std::size_t n, int d, std::uint64_t seed) {
  if (d < 1) throw Error("generate: dimension must be positive");
  RowMatrix x(static_cast<Eigen::Index>(n), d);
  std::normal_distribution<double> normal;
  for (std::size_t b = 0; b * kGenerateBlock < n; ++b) {
    Rng rng = make_rng(seed, {tag("x"), b});
    const std::size_t end = std::min(n, (b + 1) * kGenerateBlock);
    for (std::size_t i = b * kGenerateBlock; i < end; ++i) {
      for (int k = 0; k < d; ++k) x(static_cast<Eigen::Index>(i), k) = normal(rng);
    }
  }
  return x;
}

GeneratedData generate_with_info(const GroundTruth& truth, std::size_t n, int d, std::uint64_t seed) {
  if (n < 1) throw Error("generate: need at least one sample");
  truth.validate();
  if (truth.w_star.size() != d) throw DimensionMismatch("generate: w* dimension mismatch");
  RowMatrix x = gaussian_covariates(n, d, seed);
  const Vec proj = x * truth.w_star;
  Vec y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = truth.sigma(proj[i]);

  std::size_t corrupted = 0;
  const auto budget = [n](double rate) { return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n))); };
  if (const auto* ob = std::get_if<ObliviousBounded>(&truth.noise)) {
    std::uniform_real_distribution<double> unif;
    for (std::size_t b = 0; b * kGenerateBlock < n; ++b) {
      Rng rng = make_rng(seed, {tag("noise"), b});
      const std::size_t end = std::min(n, (b + 1) * kGenerateBlock);
      for (std::size_t i = b * kGenerateBlock; i < end; ++i) {
        double u = unif(rng);
        double s = unif(rng) < 0.5 ? -1.0 : 1.0;
        if (u < ob->rate) {
          y[static_cast<Eigen::Index>(i)] += s * ob->magnitude;
          ++corrupted;
        }
      }
    }
  } else if (const auto* ab = std::get_if<AdversarialBand>(&truth.noise)) {
    const Vec dir = ab->direction ? Vec(*ab->direction / ab->direction->norm()) : truth.w_star;
    if (dir.size() != d) throw DimensionMismatch("generate: band direction dimension mismatch");
    const Vec p = x * dir;
    std::vector<std::size_t> inside, outside;
    for (std::size_t i = 0; i < n; ++i) {
      double v = p[static_cast<Eigen::Index>(i)];
      (v >= ab->lo && v <= ab->hi ? inside : outside).push_back(i);
    }
    Rng rng = make_rng(seed, {tag("adversary")});
    std::shuffle(inside.begin(), inside.end(), rng);
    auto dist = [&](std::size_t i) {
      double v = p[static_cast<Eigen::Index>(i)];
      return v < ab->lo ? ab->lo - v : v - ab->hi;
    };
    std::stable_sort(outside.begin(), outside.end(), [&](std::size_t a, std::size_t b) { return dist(a) < dist(b); });
    inside.insert(inside.end(), outside.begin(), outside.end());
    const double centre = 0.5 * (ab->lo + ab->hi);
    corrupted = std::min(budget(ab->rate), n);
    for (std::size_t k = 0; k < corrupted; ++k) {
      auto i = static_cast<Eigen::Index>(inside[k]);
      y[i] = p[i] < centre ? truth.B : -truth.B;
    }
  } else if (const auto* sf = std::get_if<SignFlipTail>(&truth.noise)) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    corrupted = std::min(budget(sf->rate), n);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(corrupted), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        double pa = std::abs(proj[static_cast<Eigen::Index>(a)]);
                        double pb = std::abs(proj[static_cast<Eigen::Index>(b)]);
                        return pa != pb ? pa > pb : a < b;
                      });
    for (std::size_t k = 0; k < corrupted; ++k) y[static_cast<Eigen::Index>(idx[k])] *= -1.0;
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = truncate_label(y[i], truth.B);
  return {Dataset(std::move(x), std::move(y)), corrupted};
}

Dataset generate(const GroundTruth& truth, std::size_t n, int d, std::uint64_t seed) {
  return generate_with_info(truth, n, d, seed).data;
}

double estimate_opt(const GroundTruth& truth, const Dataset& data) { return squared_loss(data, truth.w_star, truth.sigma); }

Vec rotate_towards_random(const Vec& w, double theta, std::uint64_t seed) {
  Rng rng = make_rng(seed, {tag("rotate")});
  const Vec unit = w / w.norm();
  Vec u;
  do {
    u = random_unit_vector(static_cast<int>(w.size()), rng);
    u -= unit.dot(u) * unit;
  } while (u.norm() < 1e-6);
  u.normalize();
  return std::cos(theta) * unit + std::sin(theta) * u;
}

HalfspaceSample generate_halfspace(std::size_t n, int d, double M, double flip_rate, std::uint64_t seed) {
  HalfspaceSample hs;
  Rng rng = make_rng(seed, {tag("w_star")});
  hs.w_star = random_unit_vector(d, rng);
  RowMatrix x = gaussian_covariates(n, d, seed);
  const Vec proj = x * hs.w_star;
  Vec y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = proj[i] >= M ? 1.0 : 0.0;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  hs.flipped = std::min(n, static_cast<std::size_t>(std::floor(flip_rate * static_cast<double>(n))));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(hs.flipped), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return std::abs(proj[static_cast<Eigen::Index>(a)] - M) <
                             std::abs(proj[static_cast<Eigen::Index>(b)] - M);
                    });
  for (std::size_t k = 0; k < hs.flipped; ++k) {
    auto i = static_cast<Eigen::Index>(idx[k]);
    y[i] = 1.0 - y[i];
  }
  hs.data = Dataset(std::move(x), std::move(y));
  return hs;
}

Mat empirical_matrix(const Dataset& data, const Vec& w, const BandPartition& partition) {
  BandStatistics st = compute_band_statistics(data, w, partition);
  Mat m = Mat::Zero(data.dim(), data.dim());
  for (Eigen::Index k = 0; k < st.g.cols(); ++k) {
    m += st.g.col(k) * st.g.col(k).transpose() / partition.probs[st.band[static_cast<std::size_t>(k)]];
  }
  return m;
}

namespace {

// Per-band sums of y x^{perp w} and the probability-weighted second moment.
struct BandSums {
  Mat s;       // d x bands
  Mat q;       // sum_i y_i^2 x x' / p_{j(i)}
  std::vector<int> band;  // band of each sample, -1 outside
  double n = 0.0;
};

BandSums band_sums(const Dataset& data, const Vec& w, const BandPartition& partition) {
  const int d = data.dim();
  BandSums bs;
  bs.s = Mat::Zero(d, static_cast<Eigen::Index>(partition.bands));
  bs.q = Mat::Zero(d, d);
  bs.band.assign(data.size(), -1);
  bs.n = static_cast<double>(data.size());
  const Vec z = data.x() * w;
  Vec xp(d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto j = partition.band_of(z[static_cast<Eigen::Index>(i)]);
    if (!j) continue;
    bs.band[i] = static_cast<int>(*j);
    const double yi = data.y()[static_cast<Eigen::Index>(i)];
    for (int k = 0; k < d; ++k) xp[k] = data.row(i)[static_cast<std::size_t>(k)];
    xp -= z[static_cast<Eigen::Index>(i)] * w;
    bs.s.col(static_cast<Eigen::Index>(*j)) += yi * xp;
    bs.q.selfadjointView<Eigen::Lower>().rankUpdate(xp, yi * yi / partition.probs[*j]);
  }
  bs.q = bs.q.selfadjointView<Eigen::Lower>();
  return bs;
}

Mat debiased_from(const BandSums& bs, const BandPartition& partition) {
  const auto d = bs.s.rows();
  Mat m = Mat::Zero(d, d);
  for (Eigen::Index j = 0; j < bs.s.cols(); ++j) {
    if (bs.s.col(j).squaredNorm() == 0.0) continue;
    m += bs.s.col(j) * bs.s.col(j).transpose() / partition.probs[static_cast<std::size_t>(j)];
  }
  m -= bs.q;
  return m / (bs.n * (bs.n - 1.0));
}

// u' M u with a U-statistic per band, and a standard error that combines the
// first-order (delta-method) and degenerate second-order terms.
Estimate quadratic_form(const Dataset& data, const BandSums& bs, const BandPartition& partition, const Vec& u) {
  const std::size_t I = partition.bands;
  std::vector<double> s(I, 0.0), q(I, 0.0);
  const Vec a_proj = data.x() * u;  // u is orthogonal to w, so u.x^{perp} = u.x
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (bs.band[i] < 0) continue;
    double a = data.y()[static_cast<Eigen::Index>(i)] * a_proj[static_cast<Eigen::Index>(i)];
    s[static_cast<std::size_t>(bs.band[i])] += a;
    q[static_cast<std::size_t>(bs.band[i])] += a * a;
  }
  const double n = bs.n;
  double value = 0.0, psi2 = 0.0, psi = 0.0, second = 0.0;
  for (std::size_t j = 0; j < I; ++j) {
    const double p = partition.probs[j];
    value += (s[j] * s[j] - q[j]) / (n * (n - 1.0) * p);
    const double m = s[j] / n;
    psi += 2.0 * m * m / p;
    psi2 += 4.0 * (m / p) * (m / p) * q[j] / n;
    second += 2.0 * (q[j] / n) * (q[j] / n) / (p * p);
  }
  const double var1 = std::max(0.0, psi2 - psi * psi) / n;
  const double var2 = second / (n * n);
  return {value, std::sqrt(var1 + var2)};
}

}  // namespace

Mat debiased_matrix(const Dataset& data, const Vec& w, const BandPartition& partition) {
  return debiased_from(band_sums(data, w, partition), partition);
}

ProbeRecord population_probe(const GroundTruth& truth, const Vec& w_in, const ProbeOptions& opt, std::uint64_t seed) {
  truth.validate();
  const int d = static_cast<int>(truth.w_star.size());
  if (w_in.size() != d) throw DimensionMismatch("probe: direction dimension mismatch");
  if (d < 3) throw Error("probe: need d >= 3 for orthogonal directions");
  const Vec w = w_in / w_in.norm();
  const BandPartition partition = build_band_partition(opt.partition);
  const Dataset data = generate(truth, opt.mc_budget, d, derive_seed(seed, {tag("probe-data")}));

  ProbeRecord rec;
  rec.theta = angle(w, truth.w_star);
  const double rho = std::cos(rec.theta);
  Vec vstar = truth.w_star - truth.w_star.dot(w) * w;
  if (vstar.norm() < 1e-12) throw Error("probe: w is parallel to w*");
  vstar.normalize();
  rec.opt = estimate_opt(truth, data);

  UnivariateFn dsig = derivative_function(truth.sigma);
  if (rho > 0.0 && rho < 1.0) {
    rec.smoothed_norm = smoothed_derivative_norm(truth.sigma, rho);
  } else {
    rec.smoothed_norm = std::abs(gaussian_expectation(dsig));
  }

  const BandSums bs = band_sums(data, w, partition);
  rec.alignment = quadratic_form(data, bs, partition, vstar);
  Rng rng = make_rng(seed, {tag("probe-orth")});
  for (int k = 0; k < opt.orthogonal_directions; ++k) {
    Vec u = random_unit_vector(d, rng);
    u -= w.dot(u) * w;
    u -= vstar.dot(u) * vstar;
    u.normalize();
    rec.orthogonal.push_back(quadratic_form(data, bs, partition, u));
  }

  // Spectrum of the debiased matrix on the complement of w.
  const Mat m = debiased_from(bs, partition);
  Eigen::HouseholderQR<Mat> qr(w);
  const Mat basis = Mat(qr.householderQ()).rightCols(d - 1);
  Eigen::SelfAdjointEigenSolver<Mat> es(basis.transpose() * m * basis);
  const auto& ev = es.eigenvalues();
  rec.top_eigval = ev[d - 2];
  rec.eigengap = ev[d - 2] - ev[d - 3];
  const Vec top = basis * es.eigenvectors().col(d - 2);
  rec.top_correlation = std::abs(top.dot(vstar));

  // Gradient correlation, with T sigma' tabulated on a grid.
  if (rho > 0.0 && rho < 1.0) {
    SmoothedFunction tsig(dsig, rho);
    const double lo = -10.0, step = 0.005;
    const int points = 4001;
    std::vector<double> table(points);
    for (int k = 0; k < points; ++k) table[static_cast<std::size_t>(k)] = tsig(lo + k * step);
    auto lookup = [&](double z) {
      double u = (z - lo) / step;
      if (u <= 0.0) return table.front();
      if (u >= points - 1) return table.back();
      auto k = static_cast<std::size_t>(u);
      double f = u - static_cast<double>(k);
      return (1.0 - f) * table[k] + f * table[k + 1];
    };
    const Vec z = data.x() * w;
    const Vec zs = data.x() * truth.w_star;
    double sum = 0.0, sum2 = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double c = data.y()[i] * lookup(z[i]) * (zs[i] - z[i] * rho);
      sum += c;
      sum2 += c * c;
    }
    const double n = static_cast<double>(z.size());
    const double mean = sum / n;
    rec.gradient_correlation = {mean, std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n)};
  }
  return rec;
}

}  // namespace rsim
