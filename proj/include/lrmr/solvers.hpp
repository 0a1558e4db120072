#pragma once

// Nuclear-norm recovery from y = A(M) + z.
//
//   solve_lasso       min 1/2 ||A(X) - y||^2 + mu ||X||_*
//   solve_dantzig     min ||X||_*  s.t.  ||A*(y - A(X))|| <= lambda
//   solve_nuclear_eq  min ||X||_*  s.t.  A(X) = x
//
// The Lasso runs accelerated proximal gradient (FISTA with monotone restart),
// step step_scale / ||A||^2, prox = svt. The two constrained problems run
// ADMM splittings whose quadratic step is solved exactly through a
// GramSpectrum; for the Dantzig selector the constraint W = A*(A(X) - y) is a
// separate block projected onto the spectral ball of radius lambda.
//
// Interior-point reference: the Dantzig selector is the semidefinite program
//   min (tr W1 + tr W2) / 2  s.t.  [W1 X; X^T W2] >= 0,
//                                 [lambda I  R; R^T lambda I] >= 0,  R = A*(y - A(X)),
// which is useful for certifying small instances with an external SDP solver.
//
// All solvers rescale the data by s = ||A*(y)|| before iterating and undo the
// scaling on output, so solve(c y, c t) = c solve(y, t) up to rounding.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lrmr/gram.hpp"
#include "lrmr/mat.hpp"
#include "lrmr/measop.hpp"

namespace lrmr {

struct SolverConfig {
  int max_iters = 5000;
  /// Stop when ||X_k - X_{k-1}||_F <= rel_tol * max(||X_k||_F, 1) (in scaled units)
  /// and the constraint or optimality slack is within tolerance.
  double rel_tol = 1e-7;
  /// Lasso step = step_scale / ||A||^2.
  double step_scale = 0.99;
  /// Initial ADMM penalty (scaled units); adapted by residual balancing.
  double admm_rho = 1.0;
  /// Solve a geometric sequence of easier problems first, halving the
  /// regularization each stage and warm-starting the next.
  bool continuation = true;

  /// Throws ArgumentError on a nonpositive field or step_scale > 1.
  void validate() const;
};

struct RecoveryResult {
  Mat estimate;
  int iterations = 0;
  /// iterate_converged && slack_ok
  bool converged = false;
  bool iterate_converged = false;
  bool slack_ok = false;
  /// Lasso: objective per iteration at the target mu. Constrained solvers: nuclear norm.
  std::vector<double> objective_trace;
  /// ||A*(y - A(estimate))||
  double dual_norm = 0.0;
  /// ||y - A(estimate)||_2
  double residual_norm = 0.0;
  double wall_ms = 0.0;
};

RecoveryResult solve_lasso(const MeasOp& op, std::span<const double> y, double mu,
                           const SolverConfig& cfg = {});

/// `spectrum`, when given, must belong to `op`; pass one to amortize the
/// factorization across solves on the same operator.
RecoveryResult solve_dantzig(const MeasOp& op, std::span<const double> y, double lambda,
                             const SolverConfig& cfg = {},
                             const GramSpectrum* spectrum = nullptr);

/// Converged means the returned estimate satisfies ||A(X) - x|| <= 1e-6 ||x|| and the
/// splitting iterates have settled.
RecoveryResult solve_nuclear_eq(const MeasOp& op, std::span<const double> x,
                                const SolverConfig& cfg = {},
                                const GramSpectrum* spectrum = nullptr);

enum class SolverKind { dantzig, lasso };
std::string_view to_string(SolverKind kind);
SolverKind parse_solver_kind(std::string_view name);

/// C sqrt(max(n1, n2)) sigma with C = 8 (Dantzig) or 16 (Lasso); sigma = 0 gives 1e-9.
double default_regularization(std::size_t n1, std::size_t n2, double sigma, SolverKind kind);

struct OptimalityReport {
  double dual_norm = 0.0;
  double residual_norm = 0.0;
  /// <U V^T, A*(y - A(X))> / threshold over the numerical rank of X; equals the
  /// rank at an exact Lasso optimum.
  double alignment = 0.0;
  /// threshold - dual_norm; nonnegative iff the Dantzig constraint holds.
  double slack = 0.0;
  std::size_t rank = 0;
};

OptimalityReport check_optimality(const MeasOp& op, std::span<const double> y,
                                  const Mat& estimate, double threshold);

/// {estimate: matrix manifest, iterations, converged, dual_norm, residual_norm, wall_ms}.
/// Writes the estimate CSV at `estimate_csv`; the manifest path is stored relative to
/// `base_dir` when possible.
nlohmann::json result_json(const RecoveryResult& result, const std::filesystem::path& estimate_csv,
                           const std::filesystem::path& base_dir);

}  // namespace lrmr
