#include <algorithm>
#include <cmath>
#include <string>

#include "lrmr/analysis.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/gram.hpp"
#include "lrmr/rng.hpp"
#include "parallel.hpp"

namespace lrmr {

namespace {

double fro(const Mat& x) { return norm(x, NormKind::frobenius); }

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void require_trials(int trials, const char* who) {
  if (trials < 1) throw ArgumentError(std::string(who) + ": trials must be at least 1");
}

// Unit-Frobenius G1 G2^T with Gaussian factors; rank r almost surely.
Mat random_unit_rank_r(std::size_t n1, std::size_t n2, std::size_t r, std::uint64_t seed) {
  Mat x = matmul(gaussian_matrix(n1, r, derive_seed(seed, {1})),
                 gaussian_matrix(n2, r, derive_seed(seed, {2})).transpose());
  x *= 1.0 / fro(x);
  return x;
}

// Columns [from, from + k) of q scaled by w, times the same columns of p, transposed.
Mat block_product(const Mat& q, const Mat& p, std::size_t from, std::size_t k,
                  std::span<const double> w) {
  Mat out(q.rows(), p.rows());
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t j = 0; j < p.rows(); ++j) {
      const double pj = w[a] * p(j, from + a);
      for (std::size_t i = 0; i < q.rows(); ++i) out(i, j) += q(i, from + a) * pj;
    }
  }
  return out;
}

std::vector<double> unit_weights(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  double acc = 0.0;
  for (double& v : w) {
    v = std::abs(rng.normal()) + 1e-3;
    acc += v * v;
  }
  for (double& v : w) v /= std::sqrt(acc);
  return w;
}

// Points of an eps/3-net of the unit sphere in R^n.
std::vector<std::vector<double>> sphere_net(std::size_t n, double eps) {
  const double h = eps / (3.0 * std::sqrt(static_cast<double>(n)));
  const double window = eps / 6.0;
  const long reach = static_cast<long>(std::ceil((1.0 + window) / h));
  std::vector<std::vector<double>> out;
  std::vector<long> idx(n, -reach);
  while (true) {
    std::vector<double> g(n);
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = static_cast<double>(idx[i]) * h;
      nrm += g[i] * g[i];
    }
    nrm = std::sqrt(nrm);
    if (std::abs(nrm - 1.0) <= window) {
      for (double& v : g) v /= nrm;
      out.push_back(std::move(g));
    }
    std::size_t d = 0;
    while (d < n && ++idx[d] > reach) idx[d++] = -reach;
    if (d == n) break;
  }
  return out;
}

}  // namespace

RipEstimate empirical_delta(const MeasOp& op, std::size_t r, int trials, int ascent_iters,
                            std::uint64_t seed, unsigned workers) {
  if (r == 0 || r > std::min(op.n1(), op.n2())) {
    throw ArgumentError("empirical_delta: need 1 <= r <= min(n1, n2)");
  }
  require_trials(trials, "empirical_delta");
  if (ascent_iters < 0) throw ArgumentError("empirical_delta: ascent_iters must be nonnegative");
  const GramSpectrum gs(op);
  const double shift = gs.lambda_max();
  std::vector<double> best(static_cast<std::size_t>(trials), 0.0);
  detail::parallel_for(best.size(), workers, [&](std::size_t t) {
    Mat x = random_unit_rank_r(op.n1(), op.n2(), r, derive_seed(seed, {t}));
    Mat bx = gs.gram(x);
    double f = inner(x, bx) - 1.0;
    double top = std::abs(f);
    const bool up = f >= 0.0;
    for (int k = 0; k < ascent_iters; ++k) {
      Mat next = up ? bx : x * shift - bx;
      next = best_rank_r(next, r);
      const double len = fro(next);
      if (!(len > 0.0)) break;
      next *= 1.0 / len;
      x = std::move(next);
      bx = gs.gram(x);
      f = inner(x, bx) - 1.0;
      top = std::max(top, std::abs(f));
    }
    best[t] = top;
  });
  RipEstimate est;
  est.rank = r;
  est.trials = trials;
  est.delta_hat = *std::max_element(best.begin(), best.end());
  est.refinement_iters = ascent_iters;
  est.seed = seed;
  return est;
}

double concentration_bound(std::size_t m, double t) {
  const double md = static_cast<double>(m);
  return 2.0 * std::exp(-0.5 * md * (t * t / 2.0 - t * t * t / 3.0));
}

TailEstimate concentration_check(OpKind kind, std::size_t n1, std::size_t n2, std::size_t m,
                                 const Mat& x, double t, int trials, std::uint64_t seed,
                                 unsigned workers) {
  if (x.rows() != n1 || x.cols() != n2) throw ArgumentError("concentration_check: shape mismatch");
  if (std::abs(fro(x) - 1.0) > 1e-8) throw ArgumentError("concentration_check: x must have unit Frobenius norm");
  if (!(t > 0.0 && t < 1.0)) throw ArgumentError("concentration_check: need 0 < t < 1");
  require_trials(trials, "concentration_check");
  std::vector<char> hit(static_cast<std::size_t>(trials), 0);
  detail::parallel_for(hit.size(), workers, [&](std::size_t k) {
    const MeasOp op = make_ensemble(kind, n1, n2, m, derive_seed(seed, {k}));
    const std::vector<double> ax = apply(op, x);
    hit[k] = std::abs(dot(ax, ax) - 1.0) > t ? 1 : 0;
  });
  TailEstimate est;
  est.trials = trials;
  est.exceed = static_cast<int>(std::count(hit.begin(), hit.end(), 1));
  est.t = t;
  est.empirical = static_cast<double>(est.exceed) / trials;
  est.bound = concentration_bound(m, t);
  return est;
}

double parallelogram_check(const MeasOp& op, std::size_t r, std::size_t rp, int trials,
                           std::uint64_t seed, unsigned workers) {
  if (r == 0 || rp == 0 || r + rp > std::min(op.n1(), op.n2())) {
    throw ArgumentError("parallelogram_check: need r, rp >= 1 and r + rp <= min(n1, n2)");
  }
  require_trials(trials, "parallelogram_check");
  std::vector<double> best(static_cast<std::size_t>(trials), 0.0);
  detail::parallel_for(best.size(), workers, [&](std::size_t t) {
    const std::uint64_t ts = derive_seed(seed, {t});
    const Mat q = orthonormalize(gaussian_matrix(op.n1(), r + rp, derive_seed(ts, {1})));
    const Mat p = orthonormalize(gaussian_matrix(op.n2(), r + rp, derive_seed(ts, {2})));
    Rng rng(derive_seed(ts, {3}));
    const Mat x = block_product(q, p, 0, r, unit_weights(rng, r));
    const Mat xp = block_product(q, p, r, rp, unit_weights(rng, rp));
    best[t] = std::abs(dot(apply(op, x), apply(op, xp)));
  });
  return *std::max_element(best.begin(), best.end());
}

double covering_bound(std::size_t n, std::size_t r, double eps) {
  return std::pow(9.0 / eps, static_cast<double>((2 * n + 1) * r));
}

std::vector<Mat> low_rank_net(std::size_t n, std::size_t r, double eps) {
  if (n == 0 || n > 3) throw ArgumentError("low_rank_net: n must be 1, 2 or 3");
  if (r != 1) throw ArgumentError("low_rank_net: only r = 1 is supported");
  if (!(eps >= 0.7) || !std::isfinite(eps)) throw ArgumentError("low_rank_net: eps must be >= 0.7");
  const auto sphere = sphere_net(n, eps);
  const double count = static_cast<double>(sphere.size()) * static_cast<double>(sphere.size());
  const double limit = std::min(covering_bound(n, r, eps), static_cast<double>(kNetCap));
  if (count > limit) {
    throw ResourceError("low_rank_net: net of " + std::to_string(static_cast<long long>(count)) +
                        " matrices exceeds the cap of " + std::to_string(static_cast<long long>(limit)));
  }
  std::vector<Mat> net;
  net.reserve(sphere.size() * sphere.size());
  for (const auto& u : sphere) {
    for (const auto& v : sphere) {
      Mat e(n, n);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) e(i, j) = u[i] * v[j];
      }
      net.push_back(std::move(e));
    }
  }
  return net;
}

}  // namespace lrmr
