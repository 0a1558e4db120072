#pragma once

#include <chrono>
#include <cmath>
#include <span>
#include <vector>

#include "lrmr/mat.hpp"
#include "lrmr/measop.hpp"
#include "lrmr/solvers.hpp"

namespace lrmr::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::vector<double> scaled(std::span<const double> y, double s) {
  std::vector<double> out(y.begin(), y.end());
  for (double& v : out) v /= s;
  return out;
}

inline double l2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline double fro(const Mat& x) { return l2(x.data()); }

/// ||a - b||_F
inline double fro_dist(const Mat& a, const Mat& b) {
  double acc = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) acc += (da[i] - db[i]) * (da[i] - db[i]);
  return std::sqrt(acc);
}

/// Fills dual_norm and residual_norm of `result` from its estimate.
inline void finish(const MeasOp& op, std::span<const double> y, RecoveryResult& result,
                   const Stopwatch& clock) {
  std::vector<double> r = apply(op, result.estimate);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
  result.residual_norm = l2(r);
  result.dual_norm = norm(adjoint(op, r), NormKind::operator_norm);
  result.converged = result.iterate_converged && result.slack_ok;
  result.wall_ms = clock.elapsed_ms();
}

void check_inputs(const MeasOp& op, std::span<const double> y, const SolverConfig& cfg,
                  const char* who);

}  // namespace lrmr::detail
