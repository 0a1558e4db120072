#pragma once

// Empirical checks of the structural properties behind nuclear-norm recovery:
// isometry constants, concentration of ||A(X)||^2, covering nets of the
// low-rank sphere, the NNQ constant, oracle risk and minimax formulas.
//
// Every Monte Carlo estimator runs trial t from the stream
// derive_seed(seed, {t}), so a result depends only on (inputs, seed, trials)
// and not on the worker count. `workers` = 0 uses every available core.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "lrmr/mat.hpp"
#include "lrmr/measop.hpp"
#include "lrmr/solvers.hpp"

namespace lrmr {

struct RipEstimate {
  std::size_t rank = 0;
  int trials = 0;
  /// Largest |‖A(X)‖² − 1| seen over unit-Frobenius rank-r probes. A lower
  /// bound on the isometry constant, never an upper bound.
  double delta_hat = 0.0;
  int refinement_iters = 0;
  std::uint64_t seed = 0;
};

/// Random rank-r probes, each refined by a truncated power ascent on the
/// Gram operator (or its reflection ||A||² I − A*A when ‖A(X)‖² < 1).
RipEstimate empirical_delta(const MeasOp& op, std::size_t r, int trials, int ascent_iters,
                            std::uint64_t seed, unsigned workers = 0);

struct TailEstimate {
  int trials = 0;
  int exceed = 0;
  double t = 0.0;
  /// exceed / trials
  double empirical = 0.0;
  /// 2 exp(-(m/2)(t²/2 − t³/3))
  double bound = 0.0;
};

double concentration_bound(std::size_t m, double t);

/// Fraction of freshly seeded operators with |‖A(x)‖² − 1| > t for a fixed unit x.
TailEstimate concentration_check(OpKind kind, std::size_t n1, std::size_t n2, std::size_t m,
                                 const Mat& x, double t, int trials, std::uint64_t seed,
                                 unsigned workers = 0);

/// max |<A(X), A(X')>| over unit pairs with rank(X) <= r, rank(X') <= rp, built on
/// disjoint left and right singular subspaces so that <X, X'> = 0.
double parallelogram_check(const MeasOp& op, std::size_t r, std::size_t rp, int trials,
                           std::uint64_t seed, unsigned workers = 0);

/// Size cap on low_rank_net, in matrices.
inline constexpr std::size_t kNetCap = 2'000'000;

/// (9/eps)^((2n+1) r)
double covering_bound(std::size_t n, std::size_t r, double eps);

/// An eps-net of the unit-Frobenius rank-1 n x n matrices: u v^T with u, v
/// drawn from an eps/3-net of the unit sphere (grid points with spacing
/// eps/(3 sqrt n) near the sphere, projected onto it). Requires n <= 3,
/// r = 1, eps >= 0.7; throws ResourceError when the net would exceed
/// min(covering_bound, kNetCap).
std::vector<Mat> low_rank_net(std::size_t n, std::size_t r, double eps);

/// U R* with R* = argmin ||y − A(U R)||. Throws NumericError with the condition
/// number when the restricted normal matrix is singular.
Mat oracle_estimator(const MeasOp& op, std::span<const double> y, const Mat& u);

/// sigma² trace((A_U^T A_U)^{-1}), the variance of the oracle estimator.
double oracle_variance(const MeasOp& op, const Mat& u, double sigma);

struct OracleReport {
  double ideal_risk = 0.0;
  double achieved_err = 0.0;
  /// achieved_err / ideal_risk (0 when both vanish, +inf when only ideal_risk does).
  double ratio = 0.0;
  double bias_sq = 0.0;
  double variance = 0.0;
};

/// Oracle estimate from y on the column space `u`, compared with the truth.
OracleReport oracle_report(const MeasOp& op, std::span<const double> y, const Mat& m_true,
                           const Mat& u, double sigma);

/// sum_i min(sigma_i(M)², n sigma²)
double ideal_oracle_risk(const Mat& m_true, double sigma, std::size_t n);

/// sum_{i <= rbar} min(sigma_i², n sigma²) + sum_{i > rbar} sigma_i²
double full_rank_risk(const Mat& m_true, double sigma, std::size_t n, std::size_t rbar);

/// gamma rank(x) + ||A(x) − A(M)||², rank counting sigma_i > 1e-8 sigma_1.
double k_functional(const Mat& x, const Mat& m_true, const MeasOp& op, double gamma);

/// sum_i sigma_i 1{sigma_i > lambda} u_i v_i^T
Mat hard_threshold(const Mat& m_true, double lambda);

/// n r sigma² / (1 + delta_r)
double minimax_lower_bound(std::size_t n, std::size_t r, double sigma, double delta_r);

/// sigma² sum_i 1/lambda_i(A^T A) for an m x n design; +inf when m < n or an
/// eigenvalue is at most 1e-12 lambda_max.
double fixed_design_minimax(const Mat& a_dense, double sigma);

struct NnqEstimate {
  /// min over accepted probes of 1/||X*||_*
  double alpha_hat = 0.0;
  int trials = 0;
  /// Probes whose interpolation residual exceeded 1e-6 ||x||.
  std::vector<int> excluded;
};

/// Minimum-nuclear-norm interpolation of unit probes x; alpha_hat is an
/// empirical lower estimate of the largest alpha with A(B_*) ⊇ alpha B_2.
NnqEstimate nnq_alpha(const MeasOp& op, int trials, const SolverConfig& cfg, std::uint64_t seed,
                      unsigned workers = 0);

/// max over trials of ||A*(z)|| / (sqrt(max(n1, n2)) sigma), z ~ N(0, sigma² I_m).
double noise_dual_norm_ratio(const MeasOp& op, double sigma, int trials, std::uint64_t seed,
                             unsigned workers = 0);

void to_json(nlohmann::json& j, const RipEstimate& e);
void to_json(nlohmann::json& j, const TailEstimate& e);
void to_json(nlohmann::json& j, const OracleReport& e);
void to_json(nlohmann::json& j, const NnqEstimate& e);

}  // namespace lrmr
