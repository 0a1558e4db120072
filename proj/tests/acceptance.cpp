// Acceptance suite A1-A12. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Runtime limits are part of each criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lrmr/analysis.hpp"
#include "lrmr/bench.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/gram.hpp"
#include "lrmr/kernels.hpp"
#include "lrmr/mat.hpp"
#include "lrmr/measop.hpp"
#include "lrmr/rng.hpp"
#include "lrmr/solvers.hpp"

using namespace lrmr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double fro(const Mat& x) { return norm(x, NormKind::frobenius); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome a1() {
  const std::size_t n = 20;
  const double sigma = 0.5;
  const double lambda = default_regularization(n, n, sigma, SolverKind::dantzig);
  SpectrumRule rule;
  rule.kind = SpectrumRule::Kind::explicit_list;
  rule.values = {100.0, 60.0, 30.0};
  const TrialData d = make_trial(OpKind::identity, n, n, n * n, 3, rule, sigma, 101);
  const Mat y = adjoint(d.op, d.y);
  const Mat want = svt(y, lambda);
  const double scale = std::max(1.0, fro(want));
  const double e_ds = fro(solve_dantzig(d.op, d.y, lambda).estimate - want) / scale;
  const double e_l = fro(solve_lasso(d.op, d.y, lambda).estimate - want) / scale;
  return {e_ds <= 1e-4 && e_l <= 1e-4, fmt("dantzig %.2e, lasso %.2e (<= 1e-4)", e_ds, e_l)};
}

Outcome a2() {
  int ok_ds = 0, ok_l = 0;
  double worst = 0;
  for (int t = 0; t < 10; ++t) {
    for (SolverKind kind : {SolverKind::dantzig, SolverKind::lasso}) {
      RecoverArgs args;
      args.n1 = args.n2 = 30;
      args.m = 300;
      args.rank = 2;
      args.sigma = 0.0;
      args.solver = kind;
      args.seed = 202;
      args.trial = t;
      const auto out = run_recover(args);
      const double rel = std::sqrt(out.record.err_fro_sq) / fro(out.truth);
      worst = std::max(worst, rel);
      if (rel <= 1e-3) ++(kind == SolverKind::dantzig ? ok_ds : ok_l);
    }
  }
  return {ok_ds >= 9 && ok_l >= 9,
          fmt("within 1e-3: dantzig %.0f/10, lasso %.0f/10 (need 9); worst rel err %.2e", ok_ds, ok_l, worst)};
}

Outcome a3() {
  ExperimentSpec spec;
  spec.name = "minimax_order";
  spec.n1 = spec.n2 = 30;
  spec.m_values = {6 * 30 * 2};
  spec.rank_values = {2};
  spec.spectrum.top = 100.0;
  spec.sigma_values = {1e-3, 1e-2, 1e-1};
  spec.solver = SolverChoice::both;
  spec.trials_per_cell = 20;
  spec.master_seed = 303;
  const auto report = run_sweep(spec);
  bool pass = true;
  std::string detail;
  for (const char* solver : {"dantzig", "lasso"}) {
    double max_ratio = 0;
    std::vector<double> medians, med_err;
    for (double s : spec.sigma_values) {
      std::vector<double> ratios, errs;
      for (const auto& r : report.records) {
        if (r.solver != solver || r.sigma != s) continue;
        ratios.push_back(r.ratio_minimax);
        errs.push_back(r.err_fro_sq);
        max_ratio = std::max(max_ratio, r.ratio_minimax);
      }
      medians.push_back(median(ratios));
      med_err.push_back(median(errs));
    }
    const double spread = *std::max_element(medians.begin(), medians.end()) /
                          *std::min_element(medians.begin(), medians.end());
    const double slope = loglog_slope(spec.sigma_values, med_err);
    const bool ok = max_ratio <= 50 && spread <= 4 && std::abs(slope - 2.0) <= 0.2;
    pass = pass && ok;
    detail += std::string(solver) + fmt(": max ratio %.1f (<= 50), medians %.1f/%.1f/%.1f", max_ratio, medians[0],
                                        medians[1], medians[2]) +
              fmt(" spread %.2fx (<= 4), slope %.3f (2 +- 0.2); ", spread, slope);
  }
  return {pass, detail};
}

Outcome a4() {
  const std::size_t n = 30, r = 15;
  const std::vector<double> sigmas{1e-4, 1e-3, 1e-2, 1e-1};
  double worst = 0, adapt = 0;
  for (double sigma : sigmas) {
    RecoverArgs args;
    args.n1 = args.n2 = n;
    args.m = 3600;
    args.rank = r;
    args.spectrum.kind = SpectrumRule::Kind::geometric;
    args.spectrum.top = 1.0;
    args.spectrum.ratio = 0.5;
    args.sigma = sigma;
    args.seed = 404;
    const auto out = run_recover(args);
    const double ideal = ideal_oracle_risk(out.truth, sigma, n);
    const double ratio = out.record.err_fro_sq / ideal;
    worst = std::max(worst, ratio);
    if (sigma == sigmas.back()) {
      const double flat = out.record.err_fro_sq / (static_cast<double>(n * r) * sigma * sigma);
      adapt = ratio / flat;
    }
  }
  return {worst <= 100 && adapt >= 5,
          fmt("max err/ideal %.1f (<= 100); noisiest point ideal-ratio / flat-ratio %.2f (>= 5)", worst, adapt)};
}

Outcome a5() {
  const std::size_t n = 30, rbar = 10;
  const double sigma = 0.01;
  double worst = 0;
  for (int t = 0; t < 10; ++t) {
    RecoverArgs args;
    args.n1 = args.n2 = n;
    args.m = 900;
    args.rank = n;
    args.spectrum.kind = SpectrumRule::Kind::geometric;
    args.spectrum.ratio = 0.7;
    args.sigma = sigma;
    args.seed = 505;
    args.trial = t;
    const auto out = run_recover(args);
    worst = std::max(worst, out.record.err_fro_sq / full_rank_risk(out.truth, sigma, n, rbar));
  }
  return {worst <= 100, fmt("max err / full-rank risk %.1f (<= 100) over 10 seeds", worst)};
}

Outcome a6() {
  Mat x = gaussian_matrix(10, 10, 606);
  x *= 1.0 / fro(x);
  const auto e = concentration_check(OpKind::gaussian, 10, 10, 500, x, 0.5, 2000, 607);
  return {e.empirical <= 2 * e.bound, fmt("tail %.3e (%.0f/2000) vs 2 x bound %.3e", e.empirical, e.exceed, 2 * e.bound)};
}

Outcome a7() {
  const MeasOp id = make_ensemble(OpKind::identity, 20, 20, 400, 0);
  const double d_id = empirical_delta(id, 1, 50, 10, 701).delta_hat;
  const MeasOp op = make_ensemble(OpKind::gaussian, 20, 20, 2400, 702);
  const double d = empirical_delta(op, 1, 500, 50, 703).delta_hat;
  const double theta = parallelogram_check(op, 1, 1, 500, 704);
  return {d_id <= 1e-10 && d <= 0.5 && theta <= d + 0.1,
          fmt("identity %.1e (<= 1e-10), gaussian delta_hat %.3f (<= 0.5), parallelogram %.3f (<= %.3f)", d_id, d,
              theta, d + 0.1)};
}

Outcome a8() {
  const std::vector<MeasOp> ops{make_ensemble(OpKind::gaussian, 6, 5, 20, 801),
                                make_ensemble(OpKind::bernoulli, 6, 5, 20, 802),
                                make_ensemble(OpKind::entry_mask, 6, 5, 20, 803),
                                make_ensemble(OpKind::identity, 6, 5, 30, 0),
                                make_dense_rows(6, 5, gaussian_matrix(12, 30, 804))};
  double adj = 0, duality = -std::numeric_limits<double>::infinity();
  for (const auto& op : ops) {
    for (std::uint64_t t = 0; t < 200; ++t) {
      Mat x = gaussian_matrix(op.n1(), op.n2(), derive_seed(805, {t, 1}));
      x *= 1.0 / fro(x);
      Mat qm = gaussian_matrix(op.m(), 1, derive_seed(805, {t, 2}));
      qm *= 1.0 / fro(qm);
      const std::vector<double> q(qm.data().begin(), qm.data().end());
      const auto ax = apply(op, x);
      double lhs = 0;
      for (std::size_t i = 0; i < q.size(); ++i) lhs += ax[i] * q[i];
      adj = std::max(adj, std::abs(lhs - inner(x, adjoint(op, q))));
      const Mat y = gaussian_matrix(op.n1(), op.n2(), derive_seed(805, {t, 3}));
      duality = std::max(duality, inner(x, y) - norm(x, NormKind::nuclear) * norm(y, NormKind::operator_norm));
    }
  }
  return {adj <= 1e-10 && duality <= 1e-8,
          fmt("max adjoint gap %.1e (<= 1e-10), max <X,Y> - ||X||_* ||Y|| = %.2e (<= 1e-8)", adj, duality)};
}

Outcome a9() {
  const double sigma = 0.3;
  const double id = fixed_design_minimax(Mat::identity(12), sigma);
  const std::vector<double> d{0.5, 1.5, 2.0, 4.0};
  double want = 0;
  for (double v : d) want += sigma * sigma / (v * v);
  const double diag = fixed_design_minimax(Mat::diagonal(d, 4, 4), sigma);
  const double wide = fixed_design_minimax(gaussian_matrix(3, 5, 901), sigma);
  const double n_sigma_sq = 12.0 * (sigma * sigma);
  const bool pass = id == n_sigma_sq && std::abs(diag - want) <= 1e-10 && std::isinf(wide);
  return {pass, fmt("identity %.17g (want n sigma^2 = %.17g), diagonal gap %.1e, m < n gives %g", id,
                    n_sigma_sq, std::abs(diag - want), wide)};
}

Outcome a10() {
  const MeasOp op = make_ensemble(OpKind::gaussian, 50, 50, 400, 1001);
  const double ratio = noise_dual_norm_ratio(op, 1.0, 100, 1002);
  return {ratio <= 8, fmt("max ||A*(z)|| / (sqrt(n) sigma) over 100 trials %.3f (<= 8)", ratio)};
}

Outcome a11() {
  const auto small = nnq_alpha(make_ensemble(OpKind::gaussian, 16, 16, 64, 1101), 20, SolverConfig{}, 1102);
  const auto large = nnq_alpha(make_ensemble(OpKind::gaussian, 16, 16, 256, 1103), 20, SolverConfig{}, 1104);
  const double ratio = small.alpha_hat / large.alpha_hat;
  const bool pass = small.alpha_hat > 0 && small.excluded.empty() && large.excluded.empty() && ratio >= 1.3 &&
                    ratio <= 3;
  return {pass, fmt("alpha(m=64) %.4f with %.0f excluded, alpha(m=256) %.4f, ratio %.3f (in [1.3, 3])",
                    small.alpha_hat, static_cast<double>(small.excluded.size() + large.excluded.size()),
                    large.alpha_hat, ratio)};
}

Outcome a12() {
  const double eps = 0.9;
  const auto net = low_rank_net(2, 1, eps);
  double worst = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    Mat x = matmul(gaussian_matrix(2, 1, derive_seed(1201, {t, 1})),
                   gaussian_matrix(2, 1, derive_seed(1201, {t, 2})).transpose());
    x *= 1.0 / fro(x);
    double best = std::numeric_limits<double>::infinity();
    for (const Mat& e : net) best = std::min(best, fro(x - e));
    worst = std::max(worst, best);
  }
  const double bound = covering_bound(2, 1, eps);
  return {worst <= eps && static_cast<double>(net.size()) <= bound,
          fmt("net size %.0f (<= %.0f), worst probe distance %.3f (<= 0.9)", static_cast<double>(net.size()), bound,
              worst)};
}

struct Criterion {
  const char* id;
  double limit_s;  // 0: no runtime limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  std::printf("kernels: %s\n", std::string(kernels::isa_name(kernels::active_isa())).c_str());
  const std::vector<Criterion> criteria{
      {"A1", 5, a1},    {"A2", 120, a2}, {"A3", 600, a3}, {"A4", 600, a4},  {"A5", 300, a5},  {"A6", 60, a6},
      {"A7", 0, a7},    {"A8", 0, a8},   {"A9", 0, a9},   {"A10", 0, a10},  {"A11", 600, a11}, {"A12", 0, a12}};
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.1f s", secs);
    if (c.limit_s > 0) {
      timing += fmt(" (< %.0f s)", c.limit_s);
      if (secs >= c.limit_s) {
        o.pass = false;
        timing += " over limit";
      }
    }
    std::printf("%-3s %s  %s [%s]\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
