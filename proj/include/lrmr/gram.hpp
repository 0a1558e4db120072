#pragma once

// Spectral factorization of the normal operator B = A* A, shared by the
// splitting solvers and the oracle routines.
//
// Which side gets factored depends on the shape of A:
//   identity, entry_mask  closed forms, nothing stored beyond the mask
//   primal                N <= m: B itself (N x N, N = n1 n2) is diagonalized
//   dual                  m < N:  G = A A* (m x m) is diagonalized, and every
//                         function of B is routed through A and A*
//   iterative             too large for the memory cap; conjugate gradients
//
// Eigenvalues at or below 1e-12 times the largest count as zero.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "lrmr/mat.hpp"
#include "lrmr/measop.hpp"

namespace lrmr {

class GramSpectrum {
 public:
  enum class Form { identity, mask, primal, dual, iterative };

  /// Throws NumericError if the eigensolver fails.
  explicit GramSpectrum(const MeasOp& op, std::size_t cap = kDefaultMemoryCap);

  Form form() const;
  const MeasOp& op() const;
  /// ||A||^2, the largest eigenvalue of B.
  double lambda_max() const;
  /// Number of eigenvalues above the zero threshold (not available in iterative form: returns 0).
  std::size_t rank() const;

  /// A*(A(z)).
  Mat gram(const Mat& z) const;
  /// (I + c B^2)^{-1} r for c >= 0.
  Mat resolve_shifted_square(const Mat& r, double c) const;
  /// Minimum-Frobenius-norm X minimizing ||A(X) - x||_2, i.e. A^+ x.
  Mat pseudo_solve(std::span<const double> x) const;
  /// Orthogonal projection of z onto {X : A(X) = x} (onto the least-squares set when x
  /// lies outside the range of A).
  Mat project_affine(const Mat& z, std::span<const double> x) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

}  // namespace lrmr
