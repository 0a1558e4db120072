#include "lrmr/solvers.hpp"

#include <cmath>
#include <string>

#include "lrmr/errors.hpp"
#include "lrmr/matrix_io.hpp"
#include "solver_common.hpp"

namespace lrmr {

void SolverConfig::validate() const {
  if (max_iters <= 0) throw ArgumentError("SolverConfig: max_iters must be positive");
  if (!(rel_tol > 0.0)) throw ArgumentError("SolverConfig: rel_tol must be positive");
  if (!(step_scale > 0.0) || step_scale > 1.0) {
    throw ArgumentError("SolverConfig: step_scale must lie in (0, 1]");
  }
  if (!(admm_rho > 0.0) || !std::isfinite(admm_rho)) {
    throw ArgumentError("SolverConfig: admm_rho must be positive");
  }
}

namespace detail {

void check_inputs(const MeasOp& op, std::span<const double> y, const SolverConfig& cfg,
                  const char* who) {
  cfg.validate();
  if (y.size() != op.m()) {
    throw ArgumentError(std::string(who) + ": measurement vector has length " +
                        std::to_string(y.size()) + ", operator has m = " + std::to_string(op.m()));
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw ArgumentError(std::string(who) + ": non-finite measurement");
  }
}

}  // namespace detail

std::string_view to_string(SolverKind kind) {
  return kind == SolverKind::dantzig ? "dantzig" : "lasso";
}

SolverKind parse_solver_kind(std::string_view name) {
  if (name == "dantzig") return SolverKind::dantzig;
  if (name == "lasso") return SolverKind::lasso;
  throw ArgumentError("unknown solver: " + std::string(name));
}

double default_regularization(std::size_t n1, std::size_t n2, double sigma, SolverKind kind) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ArgumentError("default_regularization: sigma must be finite and nonnegative");
  }
  if (sigma == 0.0) return 1e-9;
  const double c = kind == SolverKind::dantzig ? 8.0 : 16.0;
  return c * std::sqrt(static_cast<double>(std::max(n1, n2))) * sigma;
}

OptimalityReport check_optimality(const MeasOp& op, std::span<const double> y,
                                  const Mat& estimate, double threshold) {
  if (y.size() != op.m()) throw ArgumentError("check_optimality: length mismatch");
  std::vector<double> r = apply(op, estimate);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
  const Mat g = adjoint(op, r);
  OptimalityReport rep;
  rep.residual_norm = detail::l2(r);
  rep.dual_norm = norm(g, NormKind::operator_norm);
  rep.slack = threshold - rep.dual_norm;
  const SvdFactors f = svd(estimate);
  const double tol = f.s.empty() ? 0.0 : 1e-8 * f.s.front();
  double align = 0.0;
  for (std::size_t k = 0; k < f.s.size(); ++k) {
    if (!(f.s[k] > tol)) break;
    ++rep.rank;
    // u_k^T G v_k
    double acc = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j) {
      double gv = 0.0;
      for (std::size_t i = 0; i < g.rows(); ++i) gv += f.u(i, k) * g(i, j);
      acc += gv * f.v(j, k);
    }
    align += acc;
  }
  rep.alignment = threshold > 0.0 ? align / threshold : 0.0;
  return rep;
}

nlohmann::json result_json(const RecoveryResult& result, const std::filesystem::path& estimate_csv,
                           const std::filesystem::path& base_dir) {
  write_csv(result.estimate, estimate_csv);
  std::error_code ec;
  std::filesystem::path stored = std::filesystem::relative(estimate_csv, base_dir, ec);
  if (ec || stored.empty()) stored = estimate_csv;
  return {{"estimate", manifest_json(result.estimate, stored)},
          {"iterations", result.iterations},
          {"converged", result.converged},
          {"dual_norm", result.dual_norm},
          {"residual_norm", result.residual_norm},
          {"wall_ms", result.wall_ms}};
}

}  // namespace lrmr
