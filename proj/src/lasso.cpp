#include <algorithm>
#include <cmath>

#include "lrmr/errors.hpp"
#include "lrmr/solvers.hpp"
#include "solver_common.hpp"

namespace lrmr {

namespace {

double lipschitz(const MeasOp& op) {
  try {
    const double n = op_spectral_norm(op, 1e-9, 20000);
    return n * n;
  } catch (const NumericError& e) {
    // Power iteration undershoots; pad the best estimate.
    return 1.02 * e.best() * e.best();
  }
}

double half_sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return 0.5 * acc;
}

// lhs = x + a (y - x) + b (x - z), elementwise over equal-length spans.
void extrapolate(std::span<double> lhs, std::span<const double> x, std::span<const double> y,
                 std::span<const double> z, double a, double b) {
  for (std::size_t i = 0; i < lhs.size(); ++i) lhs[i] = x[i] + a * (y[i] - x[i]) + b * (x[i] - z[i]);
}

}  // namespace

RecoveryResult solve_lasso(const MeasOp& op, std::span<const double> y, double mu,
                           const SolverConfig& cfg) {
  const detail::Stopwatch clock;
  detail::check_inputs(op, y, cfg, "solve_lasso");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ArgumentError("solve_lasso: mu must be positive");

  RecoveryResult result;
  result.estimate = Mat(op.n1(), op.n2());
  const double s = norm(adjoint(op, y), NormKind::operator_norm);
  if (mu >= s) {
    // Zero satisfies the subgradient condition.
    result.iterate_converged = result.slack_ok = true;
    result.objective_trace.push_back(0.5 * detail::l2(y) * detail::l2(y));
    detail::finish(op, y, result, clock);
    return result;
  }

  const std::vector<double> ys = detail::scaled(y, s);
  const double target = mu / s;
  const double step = cfg.step_scale / lipschitz(op);

  Mat x(op.n1(), op.n2());
  std::vector<double> ax(op.m(), 0.0);
  double stage_mu = cfg.continuation ? std::max(target, 0.5) : target;
  double fx = half_sq_dist(ax, ys);

  Mat yk = x;
  std::vector<double> ay = ax;
  std::vector<double> grad_in(op.m());
  double t = 1.0;
  int it = 0;
  while (it < cfg.max_iters) {
    const bool final_stage = stage_mu <= target;
    const double stage_tol = final_stage ? cfg.rel_tol : std::max(cfg.rel_tol, 1e-3);
    bool stage_done = false;
    fx = half_sq_dist(ax, ys) + stage_mu * norm(x, NormKind::nuclear);
    for (; it < cfg.max_iters; ++it) {
      for (std::size_t i = 0; i < ay.size(); ++i) grad_in[i] = ay[i] - ys[i];
      Mat g = adjoint(op, grad_in);
      Mat probe = yk;
      probe.add_scaled(-step, g);
      SvtResult z = svt_detail(probe, step * stage_mu);
      std::vector<double> az = apply(op, z.value);
      const double fz = half_sq_dist(az, ys) + stage_mu * z.nuclear;
      const double change = detail::fro_dist(z.value, x) / std::max(detail::fro(z.value), 1.0);

      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      if (fz <= fx) {
        // Accept and extrapolate from the new point.
        Mat next_y(op.n1(), op.n2());
        extrapolate(next_y.data(), z.value.data(), z.value.data(), x.data(), 0.0, (t - 1.0) / tn);
        extrapolate(ay, az, az, ax, 0.0, (t - 1.0) / tn);
        yk = std::move(next_y);
        x = std::move(z.value);
        ax = std::move(az);
        fx = fz;
        t = tn;
      } else {
        // Monotone restart: keep x, drop momentum.
        yk = x;
        ay = ax;
        t = 1.0;
      }
      if (final_stage) result.objective_trace.push_back(fx * s * s);

      if (change <= stage_tol) {
        std::vector<double> r(op.m());
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = ys[i] - ax[i];
        const double dual = norm(adjoint(op, r), NormKind::operator_norm);
        if (dual <= stage_mu * (1.0 + (final_stage ? 1e-3 : 1e-2))) {
          ++it;
          stage_done = true;
          break;
        }
      }
    }
    if (final_stage) result.iterate_converged = result.slack_ok = stage_done;
    if (final_stage || !stage_done) break;
    stage_mu = std::max(0.5 * stage_mu, target);
    yk = x;
    ay = ax;
    t = 1.0;
  }
  result.iterations = it;
  x *= s;
  result.estimate = std::move(x);
  detail::finish(op, y, result, clock);
  if (!result.iterate_converged) result.slack_ok = result.dual_norm <= mu * (1.0 + 1e-3);
  result.converged = result.iterate_converged && result.slack_ok;
  return result;
}

}  // namespace lrmr
