#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "eigen_bridge.hpp"
#include "lrmr/analysis.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/gram.hpp"
#include "lrmr/rng.hpp"
#include "parallel.hpp"

namespace lrmr {

namespace {

constexpr double kSingular = 1e-12;

double fro_sq(const Mat& x) {
  const double f = norm(x, NormKind::frobenius);
  return f * f;
}

void require_orthonormal(const Mat& u, std::size_t n1) {
  if (u.rows() != n1 || u.cols() == 0 || u.cols() > n1) {
    throw ArgumentError("oracle_estimator: u must be n1 x r with 1 <= r <= n1");
  }
  const Mat g = matmul_tn(u, u);
  for (std::size_t j = 0; j < g.cols(); ++j) {
    for (std::size_t i = 0; i < g.rows(); ++i) {
      if (std::abs(g(i, j) - (i == j ? 1.0 : 0.0)) > 1e-8) {
        throw ArgumentError("oracle_estimator: u must have orthonormal columns");
      }
    }
  }
}

// The restricted design A_U : R^{r x n2} -> R^m, R -> A(U R), as an m x (r n2)
// matrix. Row i is vec(U^T A_i).
Eigen::MatrixXd restricted_design(const MeasOp& op, const Mat& u) {
  const auto r = static_cast<Eigen::Index>(u.cols());
  const auto n1 = static_cast<Eigen::Index>(op.n1());
  const auto n2 = static_cast<Eigen::Index>(op.n2());
  Eigen::MatrixXd design(static_cast<Eigen::Index>(op.m()), r * n2);
  std::vector<double> row(op.dim());
  const auto uv = detail::view(u);
  for (std::size_t i = 0; i < op.m(); ++i) {
    op.row(i, row);
    const Eigen::Map<const Eigen::MatrixXd> ai(row.data(), n1, n2);
    const Eigen::MatrixXd ut_ai = uv.transpose() * ai;
    design.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(ut_ai.data(), r * n2);
  }
  return design;
}

struct Normal {
  Eigen::MatrixXd design;
  Eigen::MatrixXd g;
  Eigen::VectorXd eig;
  double condition = 0.0;
};

Normal normal_system(const MeasOp& op, const Mat& u, const char* who) {
  Normal out;
  out.design = restricted_design(op, u);
  out.g = out.design.transpose() * out.design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.g, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError(std::string(who) + ": eigensolver failed");
  out.eig = es.eigenvalues();
  const double top = out.eig.maxCoeff();
  const double low = out.eig.minCoeff();
  out.condition = low > 0.0 ? top / low : std::numeric_limits<double>::infinity();
  if (!(top > 0.0) || !(low > kSingular * top)) {
    std::ostringstream msg;
    msg << who << ": restricted normal matrix is singular (condition number " << out.condition << ")";
    throw NumericError(msg.str(), out.condition);
  }
  return out;
}

}  // namespace

Mat oracle_estimator(const MeasOp& op, std::span<const double> y, const Mat& u) {
  require_orthonormal(u, op.n1());
  if (y.size() != op.m()) throw ArgumentError("oracle_estimator: measurement length mismatch");
  const Normal nm = normal_system(op, u, "oracle_estimator");
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::MatrixXd& g = nm.g;
  const Eigen::VectorXd rhs = nm.design.transpose() * yv;
  const Eigen::LLT<Eigen::MatrixXd> llt(g);
  Eigen::VectorXd coef = llt.solve(rhs);
  const double target = 1e-8 * std::max(rhs.norm(), 1e-300);
  for (int refine = 0; refine < 3 && (rhs - g * coef).norm() > target; ++refine) {
    coef += llt.solve(rhs - g * coef);
  }
  if ((rhs - g * coef).norm() > target) {
    std::ostringstream msg;
    msg << "oracle_estimator: normal equations not solved to 1e-8 (condition number "
        << nm.condition << ")";
    throw NumericError(msg.str(), nm.condition);
  }
  Mat r(u.cols(), op.n2());
  std::copy(coef.data(), coef.data() + coef.size(), r.data().begin());
  return matmul(u, r);
}

double oracle_variance(const MeasOp& op, const Mat& u, double sigma) {
  require_orthonormal(u, op.n1());
  if (!(sigma >= 0.0)) throw ArgumentError("oracle_variance: sigma must be nonnegative");
  const Normal nm = normal_system(op, u, "oracle_variance");
  return sigma * sigma * nm.eig.cwiseInverse().sum();
}

OracleReport oracle_report(const MeasOp& op, std::span<const double> y, const Mat& m_true,
                           const Mat& u, double sigma) {
  if (m_true.rows() != op.n1() || m_true.cols() != op.n2()) {
    throw ArgumentError("oracle_report: truth shape does not match the operator");
  }
  OracleReport rep;
  rep.achieved_err = fro_sq(oracle_estimator(op, y, u) - m_true);
  rep.bias_sq = fro_sq(oracle_estimator(op, apply(op, m_true), u) - m_true);
  rep.variance = oracle_variance(op, u, sigma);
  rep.ideal_risk = ideal_oracle_risk(m_true, sigma, std::max(op.n1(), op.n2()));
  if (rep.ideal_risk > 0.0) {
    rep.ratio = rep.achieved_err / rep.ideal_risk;
  } else {
    rep.ratio = rep.achieved_err > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return rep;
}

double ideal_oracle_risk(const Mat& m_true, double sigma, std::size_t n) {
  return full_rank_risk(m_true, sigma, n, std::min(m_true.rows(), m_true.cols()));
}

double full_rank_risk(const Mat& m_true, double sigma, std::size_t n, std::size_t rbar) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("risk: sigma must be finite and nonnegative");
  const double noise = static_cast<double>(n) * sigma * sigma;
  const std::vector<double> s = singular_values(m_true);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += i < rbar ? std::min(s[i] * s[i], noise) : s[i] * s[i];
  return acc;
}

double k_functional(const Mat& x, const Mat& m_true, const MeasOp& op, double gamma) {
  if (!(gamma >= 0.0)) throw ArgumentError("k_functional: gamma must be nonnegative");
  if (x.rows() != m_true.rows() || x.cols() != m_true.cols()) {
    throw ArgumentError("k_functional: shape mismatch");
  }
  const std::vector<double> s = singular_values(x);
  const double tol = s.empty() ? 0.0 : 1e-8 * s.front();
  std::size_t rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  const std::vector<double> d = apply(op, x - m_true);
  double fit = 0.0;
  for (double v : d) fit += v * v;
  return gamma * static_cast<double>(rank) + fit;
}

Mat hard_threshold(const Mat& m_true, double lambda) {
  if (!(lambda >= 0.0)) throw ArgumentError("hard_threshold: lambda must be nonnegative");
  const SvdFactors f = svd(m_true);
  std::size_t k = 0;
  while (k < f.s.size() && f.s[k] > lambda) ++k;
  return k == 0 ? Mat(m_true.rows(), m_true.cols()) : reconstruct(f, k);
}

double minimax_lower_bound(std::size_t n, std::size_t r, double sigma, double delta_r) {
  if (!(delta_r >= 0.0 && delta_r < 1.0)) throw ArgumentError("minimax_lower_bound: delta_r must lie in [0, 1)");
  if (!(sigma >= 0.0)) throw ArgumentError("minimax_lower_bound: sigma must be nonnegative");
  return static_cast<double>(n) * static_cast<double>(r) * sigma * sigma / (1.0 + delta_r);
}

double fixed_design_minimax(const Mat& a_dense, double sigma) {
  if (!(sigma >= 0.0)) throw ArgumentError("fixed_design_minimax: sigma must be nonnegative");
  if (a_dense.empty()) throw ArgumentError("fixed_design_minimax: empty design");
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (a_dense.rows() < a_dense.cols()) return inf;
  const auto a = detail::view(a_dense);
  const Eigen::MatrixXd g = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("fixed_design_minimax: eigensolver failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0) || !(ev.minCoeff() > kSingular * top)) return inf;
  return sigma * sigma * ev.cwiseInverse().sum();
}

NnqEstimate nnq_alpha(const MeasOp& op, int trials, const SolverConfig& cfg, std::uint64_t seed,
                      unsigned workers) {
  if (trials < 1) throw ArgumentError("nnq_alpha: trials must be at least 1");
  cfg.validate();
  const GramSpectrum gs(op);
  std::vector<double> alpha(static_cast<std::size_t>(trials), 0.0);
  std::vector<char> ok(alpha.size(), 0);
  detail::parallel_for(alpha.size(), workers, [&](std::size_t t) {
    const CounterStream stream(derive_seed(seed, {t}));
    std::vector<double> x(op.m());
    double len = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = stream.normal(i);
      len += x[i] * x[i];
    }
    len = std::sqrt(len);
    for (double& v : x) v /= len;
    const RecoveryResult res = solve_nuclear_eq(op, x, cfg, &gs);
    if (res.residual_norm <= 1e-6) {
      ok[t] = 1;
      alpha[t] = 1.0 / norm(res.estimate, NormKind::nuclear);
    }
  });
  NnqEstimate est;
  est.trials = trials;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    if (ok[t]) {
      best = std::min(best, alpha[t]);
    } else {
      est.excluded.push_back(static_cast<int>(t));
    }
  }
  est.alpha_hat = std::isfinite(best) ? best : 0.0;
  return est;
}

double noise_dual_norm_ratio(const MeasOp& op, double sigma, int trials, std::uint64_t seed,
                             unsigned workers) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("noise_dual_norm_ratio: sigma must be positive");
  if (trials < 1) throw ArgumentError("noise_dual_norm_ratio: trials must be at least 1");
  const double scale = std::sqrt(static_cast<double>(std::max(op.n1(), op.n2()))) * sigma;
  std::vector<double> ratio(static_cast<std::size_t>(trials), 0.0);
  detail::parallel_for(ratio.size(), workers, [&](std::size_t t) {
    const CounterStream stream(derive_seed(seed, {t}));
    std::vector<double> z(op.m());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = sigma * stream.normal(i);
    ratio[t] = norm(adjoint(op, z), NormKind::operator_norm) / scale;
  });
  return *std::max_element(ratio.begin(), ratio.end());
}

void to_json(nlohmann::json& j, const RipEstimate& e) {
  j = {{"rank", e.rank},
       {"trials", e.trials},
       {"delta_hat", e.delta_hat},
       {"refinement_iters", e.refinement_iters},
       {"seed", e.seed}};
}

void to_json(nlohmann::json& j, const TailEstimate& e) {
  j = {{"trials", e.trials},
       {"exceed", e.exceed},
       {"t", e.t},
       {"empirical", e.empirical},
       {"bound", e.bound}};
}

void to_json(nlohmann::json& j, const OracleReport& e) {
  j = {{"ideal_risk", e.ideal_risk},
       {"achieved_err", e.achieved_err},
       {"ratio", e.ratio},
       {"bias_sq", e.bias_sq},
       {"variance", e.variance}};
}

void to_json(nlohmann::json& j, const NnqEstimate& e) {
  j = {{"alpha_hat", e.alpha_hat},
       {"trials", e.trials},
       {"excluded_count", e.excluded.size()},
       {"excluded", e.excluded}};
}

}  // namespace lrmr
