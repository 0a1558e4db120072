#pragma once

#include <cmath>
#include <vector>

#include "lrmr/mat.hpp"
#include "lrmr/rng.hpp"

namespace testing {

inline double fro(const lrmr::Mat& x) { return lrmr::norm(x, lrmr::NormKind::frobenius); }

inline double rel_err(const lrmr::Mat& a, const lrmr::Mat& b) {
  return fro(a - b) / std::max(1.0, fro(b));
}

inline std::vector<double> gaussian_vector(std::size_t n, std::uint64_t seed) {
  lrmr::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Orthogonal projector onto the span of the first k columns of u.
inline lrmr::Mat projector(const lrmr::Mat& u, std::size_t k) {
  lrmr::Mat p(u.rows(), u.rows());
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t j = 0; j < u.rows(); ++j) {
      for (std::size_t i = 0; i < u.rows(); ++i) p(i, j) += u(i, a) * u(j, a);
    }
  }
  return p;
}

}  // namespace testing
