// ADMM splittings for the two constrained nuclear-norm problems.
//
// Dantzig selector, with B = A*A and b = A*(y):
//   min ||X||_* + indicator(||W|| <= lambda)  s.t.  X = Z,  W = B Z - b
// Equality-constrained problem:
//   min ||X||_* + indicator(A(Z) = x)        s.t.  X = Z
// Both use scaled duals; the Z-step is exact: (I + B^2)^{-1} for the Dantzig
// selector, an affine projection for the equality problem.

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "lrmr/errors.hpp"
#include "lrmr/solvers.hpp"
#include "solver_common.hpp"

namespace lrmr {

namespace {

constexpr double kBalance = 10.0;
constexpr int kBalanceEvery = 10;
constexpr double kRelax = 1.6;
constexpr int kPolishEvery = 100;

// Residual balancing; returns the factor applied to rho (1 when unchanged).
double balance(double primal, double dual, double& rho) {
  if (primal > kBalance * dual) {
    rho *= 2.0;
    return 2.0;
  }
  if (dual > kBalance * primal) {
    rho *= 0.5;
    return 0.5;
  }
  return 1.0;
}

const GramSpectrum& spectrum_for(const MeasOp& op, const GramSpectrum* given,
                                 std::optional<GramSpectrum>& own) {
  if (given != nullptr) {
    if (given->op().n1() != op.n1() || given->op().n2() != op.n2() || given->op().m() != op.m()) {
      throw ArgumentError("solver: spectrum belongs to a different operator shape");
    }
    return *given;
  }
  own.emplace(op);
  return *own;
}


// When lambda is tiny relative to ||A*(y)|| the iterates settle on the right
// subspaces long before the spectral constraint is met to three digits. A
// least-squares correction D in the tangent space {U P + Q V^T} of the rank-k
// iterate then restores feasibility; it is accepted only if it is small,
// feasible, and leaves the nuclear norm within 1e-3.
std::optional<Mat> tangent_polish(const MeasOp& op, std::span<const double> ys, const Mat& x,
                                  std::size_t rank, double feasible) {
  if (rank == 0) return std::nullopt;
  const std::size_t n1 = op.n1();
  const std::size_t n2 = op.n2();
  const std::size_t k = std::min(rank, std::min(n1, n2));
  const std::size_t cols = k * (n1 + n2);
  if (cols > op.m() || op.m() * cols > kDefaultMemoryCap) return std::nullopt;
  const SvdFactors f = svd(x);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(op.m()), static_cast<Eigen::Index>(cols));
  std::vector<Mat> basis;
  basis.reserve(cols);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t j = 0; j < n2; ++j) {
      Mat e(n1, n2);
      for (std::size_t i = 0; i < n1; ++i) e(i, j) = f.u(i, a);
      basis.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < n1; ++i) {
      Mat e(n1, n2);
      for (std::size_t j = 0; j < n2; ++j) e(i, j) = f.v(j, a);
      basis.push_back(std::move(e));
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    const std::vector<double> col = apply(op, basis[c]);
    for (std::size_t i = 0; i < col.size(); ++i) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = col[i];
  }
  const std::vector<double> ax = apply(op, x);
  Eigen::VectorXd r(static_cast<Eigen::Index>(op.m()));
  for (std::size_t i = 0; i < ax.size(); ++i) r[static_cast<Eigen::Index>(i)] = ys[i] - ax[i];
  const Eigen::VectorXd coef = g.completeOrthogonalDecomposition().solve(r);
  Mat d(n1, n2);
  for (std::size_t c = 0; c < cols; ++c) d.add_scaled(coef[static_cast<Eigen::Index>(c)], basis[c]);
  if (detail::fro(d) > 1e-3 * detail::fro(x)) return std::nullopt;
  Mat polished = x + d;
  std::vector<double> res = apply(op, polished);
  for (std::size_t i = 0; i < res.size(); ++i) res[i] = ys[i] - res[i];
  if (norm(adjoint(op, res), NormKind::operator_norm) > feasible) return std::nullopt;
  if (norm(polished, NormKind::nuclear) > (1.0 + 1e-3) * norm(x, NormKind::nuclear)) return std::nullopt;
  return polished;
}

}  // namespace

RecoveryResult solve_dantzig(const MeasOp& op, std::span<const double> y, double lambda,
                             const SolverConfig& cfg, const GramSpectrum* spectrum) {
  const detail::Stopwatch clock;
  detail::check_inputs(op, y, cfg, "solve_dantzig");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("solve_dantzig: lambda must be positive");
  }
  RecoveryResult result;
  result.estimate = Mat(op.n1(), op.n2());
  const Mat aty = adjoint(op, y);
  const double s = norm(aty, NormKind::operator_norm);
  if (lambda >= s) {
    result.iterate_converged = result.slack_ok = true;
    result.objective_trace.push_back(0.0);
    detail::finish(op, y, result, clock);
    return result;
  }
  std::optional<GramSpectrum> own;
  const GramSpectrum& gs = spectrum_for(op, spectrum, own);

  const Mat b = aty * (1.0 / s);
  const std::vector<double> ys = detail::scaled(y, s);
  const double lam = lambda / s;
  const double feasible = lam * (1.0 + 1e-3);
  double rho = cfg.admm_rho;

  Mat z(op.n1(), op.n2());
  Mat bz(op.n1(), op.n2());
  Mat u(op.n1(), op.n2());
  Mat v(op.n1(), op.n2());
  Mat x = z;
  std::size_t rank = 0;
  int next_polish = 0;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    SvtResult xs = svt_detail(z - u, 1.0 / rho);
    x = std::move(xs.value);
    rank = xs.rank;
    Mat w = clip_singular_values(bz - b - v, lam);

    Mat xh = x * kRelax + z * (1.0 - kRelax);
    Mat wh = w * kRelax + (bz - b) * (1.0 - kRelax);
    Mat rhs = xh + u + gs.gram(wh + v + b);
    Mat z_new = gs.resolve_shifted_square(rhs, 1.0);
    Mat bz_new = gs.gram(z_new);

    const double primal =
        std::hypot(detail::fro_dist(x, z_new), detail::fro(w - bz_new + b));
    const double dual =
        rho * std::hypot(detail::fro_dist(z_new, z), detail::fro_dist(bz_new, bz));
    u += xh - z_new;
    v += wh - bz_new + b;
    z = std::move(z_new);
    bz = std::move(bz_new);
    result.objective_trace.push_back(s * xs.nuclear);

    const double primal_rel =
        primal / std::max({std::hypot(detail::fro(x), detail::fro(w)),
                           std::hypot(detail::fro(z), detail::fro(bz - b)), 1e-300});
    const double dual_rel = dual / std::max(rho * std::hypot(detail::fro(u), detail::fro(v)), 1e-300);

    if (std::max(primal_rel, dual_rel) <= cfg.rel_tol) {
      if (norm(b - gs.gram(x), NormKind::operator_norm) <= feasible) {
        ++it;
        result.iterate_converged = true;
        break;
      }
      if (it >= next_polish) {
        next_polish = it + kPolishEvery;
        if (auto fixed = tangent_polish(op, ys, x, rank, feasible)) {
          x = std::move(*fixed);
          ++it;
          result.iterate_converged = true;
          break;
        }
      }
    }
    if (cfg.continuation && it % kBalanceEvery == 0) {
      const double f = balance(primal_rel, dual_rel, rho);
      if (f != 1.0) {
        u *= 1.0 / f;
        v *= 1.0 / f;
      }
    }
  }
  result.iterations = it;
  x *= s;
  result.estimate = std::move(x);
  detail::finish(op, y, result, clock);
  result.slack_ok = result.dual_norm <= lambda * (1.0 + 1e-3);
  result.converged = result.iterate_converged && result.slack_ok;
  return result;
}

RecoveryResult solve_nuclear_eq(const MeasOp& op, std::span<const double> x_meas,
                                const SolverConfig& cfg, const GramSpectrum* spectrum) {
  const detail::Stopwatch clock;
  detail::check_inputs(op, x_meas, cfg, "solve_nuclear_eq");
  RecoveryResult result;
  result.estimate = Mat(op.n1(), op.n2());
  const double xnorm = detail::l2(x_meas);
  if (xnorm == 0.0) {
    result.iterate_converged = result.slack_ok = true;
    result.objective_trace.push_back(0.0);
    detail::finish(op, x_meas, result, clock);
    return result;
  }
  std::optional<GramSpectrum> own;
  const GramSpectrum& gs = spectrum_for(op, spectrum, own);

  const double s = norm(adjoint(op, x_meas), NormKind::operator_norm);
  const double scale = s > 0.0 ? s : xnorm;
  const std::vector<double> xs = detail::scaled(x_meas, scale);
  double rho = cfg.admm_rho;

  Mat z = gs.project_affine(Mat(op.n1(), op.n2()), xs);
  Mat u(op.n1(), op.n2());
  Mat x = z;
  Mat x_prev = z;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    SvtResult sv = svt_detail(z - u, 1.0 / rho);
    x_prev = std::move(x);
    x = std::move(sv.value);
    Mat z_new = gs.project_affine(x + u, xs);
    Mat r = x - z_new;
    u += r;
    const double primal = detail::fro(r);
    const double dual = rho * detail::fro_dist(z_new, z);
    z = std::move(z_new);
    result.objective_trace.push_back(scale * sv.nuclear);

    if (cfg.continuation) {
      const double f = balance(primal, dual, rho);
      if (f != 1.0) u *= 1.0 / f;
    }

    const double change = detail::fro_dist(x, x_prev) / std::max(detail::fro(x), 1.0);
    if (it > 0 && change <= cfg.rel_tol && primal <= 1e-6 * std::max(detail::fro(z), 1e-300)) {
      ++it;
      result.iterate_converged = true;
      break;
    }
  }
  result.iterations = it;
  Mat est = gs.project_affine(x, xs);
  est *= scale;
  result.estimate = std::move(est);
  detail::finish(op, x_meas, result, clock);
  result.slack_ok = result.residual_norm <= 1e-6 * xnorm;
  result.converged = result.iterate_converged && result.slack_ok;
  return result;
}

}  // namespace lrmr
